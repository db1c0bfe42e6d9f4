"""Command-line entry point: ``heckecount {count,verify,pipeline,diag}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .experiments import (
    COMMANDS,
    EXIT_CONFIG,
    EXIT_IO,
    ConfigError,
    bundled_config_names,
    load_config_text,
    parse_config,
    run_experiments,
)

log = logging.getLogger("heckecount")

DEFAULT_CONFIGS = {
    "count": "count_small.json",
    "verify": "lemma35_grid.json",
    "pipeline": "pipeline_toy.json",
    "diag": "diag.json",
}

HELP = {
    "count": "tabulate |S(Q, M)| over forms, primes and nu",
    "verify": "run a verification suite (lemma35, lemma34, polarization, shell_oracle)",
    "pipeline": "run the Q -> Q2 -> Q3 exchange and check the counting chain",
    "diag": "evaluate d_lambda, the amplification diagnostic and the M threshold",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heckecount", description="Exact Hecke double-coset counting experiments.")
    parser.add_argument("--list-configs", action="store_true", help="list bundled configurations and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", default=DEFAULT_CONFIGS[name], help="path or bundled config name (default: %(default)s)")
        p.add_argument("--out", default="results", help="output directory (default: %(default)s)")
        p.add_argument("--jobs", type=int, default=None, help="worker processes (default: $HECKECOUNT_JOBS or 1)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--timing", action="store_true", help="fill the millis column (output is then not reproducible)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.list_configs:
        print("\n".join(bundled_config_names()))
        return 0
    if args.command is None:
        build_parser().print_usage(sys.stderr)
        return EXIT_CONFIG

    try:
        text, source = load_config_text(args.config)
    except FileNotFoundError:
        print(f"error: config not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        data = json.loads(text)
        if args.seed is not None and isinstance(data, dict):
            data["seed"] = args.seed
        cfg = parse_config(data, args.command, source)
    except json.JSONDecodeError as exc:
        print(f"error: {source}: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    if args.timing:
        cfg = replace(cfg, timing=True)

    outcome = run_experiments(cfg, args.out, args.jobs)
    for msg in outcome.messages:
        print(f"error: {msg}", file=sys.stderr)
    if outcome.summary:
        failed = [r["query_id"] for r in outcome.rows if r["pass"] == "false"]
        print(f"{cfg.command}: {outcome.summary['cells']} cells, {len(outcome.rows)} rows, "
              f"hard checks {'passed' if outcome.summary['hard_checks_passed'] else 'FAILED'}")
        if failed:
            print("rows with pass=false: " + ", ".join(sorted(set(failed))))
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
