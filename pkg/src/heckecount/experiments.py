"""Configuration-driven experiments: counting tables, verification suites,
pipeline runs and the diagnostic formulas.

A configuration is a JSON object with a ``schema_version`` and one section per
command.  Each command expands into independent cells that may run in a worker
pool; results are collected in configuration order so that the CSV output of a
given configuration is byte-identical between runs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from itertools import combinations, product
from pathlib import Path
from typing import Any, Mapping, Sequence

from .gaussian import GaussianInt, GaussianRational, SplitPrime, parse_gaussian, parse_gaussian_rational, split_primes_in_window, valuation
from .hecke import EXACT, CountQuery, HeckeCosetSpec, enumerate_S, membership_test, one_prime_bound, verify_one_prime_bound, verify_two_primes_empty
from .linalg import GaussMatrix, SelfAdjointMatrix, denominator_lcm, hermitian_form
from .enumeration import ShellQuery, enumerate_shell
from .pipeline import EndgameConfig, Envelope, q_from_point, run_pipeline, validate_M, m_threshold
from .polarization import default_forms, exhaustive_polarization

SCHEMA_VERSION = 1
JOBS_ENV = "HECKECOUNT_JOBS"
CSV_COLUMNS = ("query_id", "n", "Q_hash", "pi", "pi2", "nu", "M", "count", "bound", "pass", "millis")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


# ---------------------------------------------------------------------------
# diagnostic formulas
# ---------------------------------------------------------------------------


def d_lambda(mu: Sequence, tol: float = 1e-9):
    """prod_{j<k} (1 + |mu_j - mu_k|)^2 for mu summing to zero.

    Exact (a Fraction) when every entry is an int or Fraction, a float otherwise.
    """
    exact = all(isinstance(x, (int, Fraction)) for x in mu)
    if exact:
        vals = [Fraction(x) for x in mu]
        if sum(vals) != 0:
            raise ValueError("entries must sum to zero")
        out = Fraction(1)
    else:
        vals = [float(x) for x in mu]
        if abs(math.fsum(vals)) > tol:
            raise ValueError("entries must sum to zero")
        out = 1.0
    for a, b in combinations(vals, 2):
        out *= (1 + abs(a - b)) ** 2
    return out


def amplification_diagnostic(
    counts: Mapping[tuple, int],
    L: float,
    P_size: int,
    d_mu_star: float,
    kappa: float,
    K_amp: float,
    n: int,
) -> float:
    """1/P + D(mu*)^-kappa L^K + sum_nu P^-2 sum_{pi, pi'} count / L^(nu (n - 1)).

    ``counts`` maps (pi, pi', nu) to a count.
    """
    if P_size < 1:
        raise ValueError("P_size must be at least 1")
    if L < 2:
        raise ValueError("L must be at least 2")
    second = 0.0 if math.isinf(d_mu_star) else d_mu_star ** (-kappa) * L ** K_amp
    third = sum(c / L ** (nu * (n - 1)) for (_, _, nu), c in counts.items()) / P_size ** 2
    return 1 / P_size + second + third


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists field-level messages."""

    def __init__(self, errors: Sequence[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    n: int
    section: dict
    seed: int = 0
    jobs: int = 1
    timing: bool = False
    source: str = "<dict>"


COMMANDS = ("count", "verify", "pipeline", "diag")
SUITES = ("lemma35", "lemma34", "polarization", "shell_oracle")


def bundled_config_names() -> list[str]:
    return sorted(p.name for p in resources.files("heckecount.configs").iterdir() if p.name.endswith(".json"))


def load_config_text(ref: str) -> tuple[str, str]:
    """Text of a config given a path, or the name of a bundled config."""
    p = Path(ref)
    if p.exists():
        return p.read_text(), str(p)
    name = ref if ref.endswith(".json") else ref + ".json"
    res = resources.files("heckecount.configs") / name
    if res.is_file():
        return res.read_text(), f"bundled:{name}"
    raise FileNotFoundError(ref)


def _form_matrix(spec, n: int, rng: random.Random, where: str, errors: list[str]) -> SelfAdjointMatrix | None:
    try:
        if isinstance(spec, list):
            spec = {"diag": spec}
        if not isinstance(spec, dict) or len(spec) != 1:
            raise ValueError("a form is {'diag': [...]}, {'matrix': [[...]]}, {'point': [[...]]} or {'sample': {...}}")
        (kind, val), = spec.items()
        if kind == "diag":
            q = SelfAdjointMatrix.from_matrix(GaussMatrix.diag([parse_gaussian_rational(str(x)) for x in val]))
        elif kind == "matrix":
            q = SelfAdjointMatrix(tuple(tuple(parse_gaussian_rational(str(x)) for x in row) for row in val))
        elif kind == "point":
            q = q_from_point(GaussMatrix(tuple(tuple(parse_gaussian_rational(str(x)) for x in row) for row in val)))
        elif kind == "sample":
            q = sample_in_envelope(Envelope(Fraction(val["lo"]), Fraction(val["hi"]), n), int(val.get("denominator", 4)), rng)
        else:
            raise ValueError(f"unknown form kind {kind!r}")
    except (ValueError, KeyError, TypeError, ArithmeticError) as exc:
        errors.append(f"{where}: {exc}")
        return None
    if q.n != n:
        errors.append(f"{where}: dimension {q.n} differs from n = {n}")
        return None
    if not q.is_positive_definite():
        errors.append(f"{where}: form is not positive definite")
        return None
    return q


def sample_in_envelope(env: Envelope, denominator: int, rng: random.Random, tries: int = 1000) -> SelfAdjointMatrix:
    """A random rational self-adjoint matrix certified inside the envelope."""
    n = env.n
    for _ in range(tries):
        rows = [[None] * n for _ in range(n)]
        for j in range(n):
            rows[j][j] = GaussianRational.from_fractions(Fraction(rng.randint(math.ceil(env.lo * denominator), math.floor(env.hi * denominator)), denominator))
            for k in range(j + 1, n):
                re_part = Fraction(rng.randint(-denominator, denominator), denominator * n)
                im_part = Fraction(rng.randint(-denominator, denominator), denominator * n)
                rows[j][k] = GaussianRational.from_fractions(re_part, im_part)
                rows[k][j] = rows[j][k].conj()
        q = SelfAdjointMatrix(tuple(tuple(r) for r in rows))
        if env.contains_interior(q):
            return q
    raise ValueError("could not sample a form inside the envelope")


def _prime_list(val, where: str, errors: list[str]) -> list[SplitPrime]:
    try:
        if isinstance(val, dict) and "window" in val:
            lo, hi = val["window"]
            return split_primes_in_window(int(lo), int(hi))
        if not isinstance(val, list) or not val:
            raise ValueError("expected a nonempty list of primes or {'window': [c1, c2]}")
        return [SplitPrime.from_gaussian(parse_gaussian(str(x))) for x in val]
    except (ValueError, TypeError, ArithmeticError) as exc:
        errors.append(f"{where}: {exc}")
        return []


def _int_list(val, where: str, errors: list[str], lo: int = 1) -> list[int]:
    if not isinstance(val, list) or not all(isinstance(x, int) and not isinstance(x, bool) and x >= lo for x in val) or not val:
        errors.append(f"{where}: expected a nonempty list of integers >= {lo}")
        return []
    return val


def parse_config(data: Any, command: str | None = None, source: str = "<dict>") -> ExperimentConfig:
    """Validate a decoded JSON configuration; raises ConfigError listing every problem."""
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["config: expected a JSON object"])
    if data.get("schema_version") != SCHEMA_VERSION:
        errors.append(f"schema_version: expected {SCHEMA_VERSION}, got {data.get('schema_version')!r}")
    cmd = command or data.get("command")
    if cmd not in COMMANDS:
        errors.append(f"command: expected one of {', '.join(COMMANDS)}, got {cmd!r}")
        raise ConfigError(errors)
    if data.get("command", cmd) != cmd:
        errors.append(f"command: config is for {data.get('command')!r}, not {cmd!r}")
    n = data.get("n", 2)
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        errors.append("n: expected an integer >= 2")
        n = 2
    section = data.get(cmd)
    if not isinstance(section, dict):
        errors.append(f"{cmd}: missing section")
        raise ConfigError(errors)
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        errors.append("seed: expected an integer")
    _validate_section(cmd, section, n, random.Random(seed if isinstance(seed, int) else 0), errors)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(cmd, n, section, seed, 1, bool(data.get("timing", False)), source)


def _validate_section(cmd: str, sec: dict, n: int, rng: random.Random, errors: list[str]):
    if cmd in ("count", "pipeline") or (cmd == "verify" and sec.get("suite") in ("lemma35", "lemma34", "shell_oracle")):
        forms = sec.get("forms")
        if not isinstance(forms, list) or not forms:
            errors.append(f"{cmd}.forms: expected a nonempty list")
        else:
            for i, f in enumerate(forms):
                _form_matrix(f, n, rng, f"{cmd}.forms[{i}]", errors)
    if cmd == "count":
        _prime_list(sec.get("pi"), "count.pi", errors)
        if "pi2" in sec:
            _prime_list(sec["pi2"], "count.pi2", errors)
        _check_nu(sec, n, "count", errors)
        _check_M(sec.get("M", EXACT), "count.M", errors)
        _check_m(sec, "count", errors)
        _check_constants(sec, "count", errors)
    elif cmd == "verify":
        suite = sec.get("suite")
        if suite not in SUITES:
            errors.append(f"verify.suite: expected one of {', '.join(SUITES)}, got {suite!r}")
            return
        if suite in ("lemma35", "lemma34"):
            _prime_list(sec.get("pi"), "verify.pi", errors)
            if suite == "lemma35":
                _prime_list(sec.get("pi2"), "verify.pi2", errors)
            _check_nu(sec, n, "verify", errors)
            _check_m(sec, "verify", errors)
            for i, f in enumerate(sec.get("forms") or []):
                if not (isinstance(f, list) or (isinstance(f, dict) and "diag" in f)):
                    errors.append(f"verify.forms[{i}]: this suite needs diagonal forms")
            if suite == "lemma34":
                _check_constants(sec, "verify", errors)
        elif suite == "polarization":
            try:
                SplitPrime.above(int(sec.get("p", 5)))
            except (ValueError, TypeError) as exc:
                errors.append(f"verify.p: {exc}")
            _int_list(sec.get("rho", [1, 2]), "verify.rho", errors)
            _int_list(sec.get("dims", [2, 3]), "verify.dims", errors, lo=2)
        elif suite == "shell_oracle":
            t = sec.get("t_max", 60)
            if not isinstance(t, int) or t < 0:
                errors.append("verify.t_max: expected a nonnegative integer")
    elif cmd == "pipeline":
        _prime_list(sec.get("primes"), "pipeline.primes", errors)
        try:
            _endgame(sec.get("endgame", {}), n)
        except (ValueError, TypeError) as exc:
            errors.append(f"pipeline.endgame: {exc}")
        for i, inj in enumerate(sec.get("inject", [])):
            try:
                _injected(inj, n)
            except (ValueError, KeyError, TypeError, ArithmeticError) as exc:
                errors.append(f"pipeline.inject[{i}]: {exc}")
    elif cmd == "diag":
        for i, mu in enumerate(sec.get("d_lambda", [])):
            try:
                d_lambda([_number(x) for x in mu])
            except (ValueError, TypeError, ZeroDivisionError) as exc:
                errors.append(f"diag.d_lambda[{i}]: {exc}")
        for i, cfg in enumerate(sec.get("validate_M", [])):
            try:
                _endgame(cfg, cfg.get("n", n) if isinstance(cfg, dict) else n)
            except (ValueError, TypeError, AttributeError) as exc:
                errors.append(f"diag.validate_M[{i}]: {exc}")
        for i, amp in enumerate(sec.get("amplification", [])):
            missing = [k for k in ("counts", "L", "P_size", "d_mu_star", "kappa", "K_amp") if not isinstance(amp, dict) or k not in amp]
            if missing:
                errors.append(f"diag.amplification[{i}]: missing {', '.join(missing)}")


def _check_nu(sec: dict, n: int, where: str, errors: list[str]):
    nus = sec.get("nu", list(range(1, n + 1)))
    if _int_list(nus, f"{where}.nu", errors) and max(nus) > n:
        errors.append(f"{where}.nu: values must lie in [1, {n}]")


def _check_M(val, where: str, errors: list[str]):
    if val != EXACT and not (isinstance(val, int) and val >= 1):
        errors.append(f"{where}: expected a positive integer or \"EXACT\"")


def _check_m(sec: dict, where: str, errors: list[str]):
    for x in sec.get("m", ["1"]):
        try:
            if not parse_gaussian(str(x)):
                raise ValueError("m must be nonzero")
        except ValueError as exc:
            errors.append(f"{where}.m: {exc}")


def _check_constants(sec: dict, where: str, errors: list[str]):
    c = sec.get("constants")
    if c is None:
        return
    if not isinstance(c, dict) or not all(isinstance(c.get(k), (int, float)) for k in ("C", "eps")):
        errors.append(f"{where}.constants: expected {{'C': number, 'eps': number}}")


def _number(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, float)):
        return x
    raise TypeError(f"not a number: {x!r}")


def _endgame(d: dict, n: int) -> EndgameConfig:
    if not isinstance(d, dict):
        raise TypeError("expected an object")
    known = {"D", "E", "M", "T", "L0", "toy_override", "j_windows", "k_windows", "denom_start", "denom_ceiling", "n"}
    extra = set(d) - known
    if extra:
        raise ValueError(f"unknown keys {sorted(extra)}")
    kw = {k: d[k] for k in d if k != "n"}
    for key in ("j_windows", "k_windows"):
        if key in kw:
            kw[key] = tuple(tuple(int(x) for x in w) for w in kw[key])
    return EndgameConfig(n=n, **kw)


def _injected(d: dict, n: int):
    g = GaussMatrix(tuple(tuple(parse_gaussian_rational(str(x)) for x in row) for row in d["gamma"]))
    if g.n != n:
        raise ValueError("dimension mismatch")
    pi = SplitPrime.from_gaussian(parse_gaussian(str(d["pi"])))
    pi2 = SplitPrime.from_gaussian(parse_gaussian(str(d.get("pi2", d["pi"]))))
    return g, HeckeCosetSpec(pi, pi2, int(d["nu"]), n)


# ---------------------------------------------------------------------------
# cells
# ---------------------------------------------------------------------------


def q_hash(q: GaussMatrix) -> str:
    return hashlib.sha256(json.dumps(q.to_json()).encode()).hexdigest()[:12]


@dataclass
class CellResult:
    rows: list[dict]
    details: list[dict] = field(default_factory=list)
    hard_ok: bool = True


def _row(query_id, n, q=None, pi="", pi2="", nu="", M="", count="", bound="", passed="", millis=""):
    return {
        "query_id": query_id,
        "n": n,
        "Q_hash": q_hash(q) if q is not None else "",
        "pi": str(pi),
        "pi2": str(pi2),
        "nu": nu,
        "M": M,
        "count": count,
        "bound": bound,
        "pass": passed,
        "millis": millis,
    }


def _fmt_bound(b: float) -> str:
    return f"{b:.6g}"


def _cells(cfg: ExperimentConfig) -> list[tuple[str, dict]]:
    sec, n = cfg.section, cfg.n
    cells: list[tuple[str, dict]] = []
    if cfg.command == "count":
        pis = [str(p) for p in _prime_list(sec["pi"], "", [])]
        pi2s = [str(p) for p in _prime_list(sec["pi2"], "", [])] if "pi2" in sec else pis
        for fi, (a, b, nu, m) in product(range(len(sec["forms"])), product(pis, pi2s, sec.get("nu", list(range(1, n + 1))), sec.get("m", ["1"]))):
            cells.append(("count", {"form": fi, "pi": a, "pi2": b, "nu": nu, "m": str(m)}))
    elif cfg.command == "verify":
        suite = sec["suite"]
        if suite == "lemma35":
            pis = [str(p) for p in _prime_list(sec["pi"], "", [])]
            pi2s = [str(p) for p in _prime_list(sec["pi2"], "", [])]
            for fi, a, b, nu, m in product(range(len(sec["forms"])), pis, pi2s, sec.get("nu", list(range(1, n + 1))), sec.get("m", ["1"])):
                cells.append(("lemma35", {"form": fi, "pi": a, "pi2": b, "nu": nu, "m": str(m)}))
        elif suite == "lemma34":
            pis = [str(p) for p in _prime_list(sec["pi"], "", [])]
            for fi, a, nu, m in product(range(len(sec["forms"])), pis, sec.get("nu", list(range(1, n + 1))), sec.get("m", ["1"])):
                cells.append(("lemma34", {"form": fi, "pi": a, "nu": nu, "m": str(m)}))
        elif suite == "polarization":
            for dim, rho in product(sec.get("dims", [2, 3]), sec.get("rho", [1, 2])):
                cells.append(("polarization", {"p": int(sec.get("p", 5)), "dim": dim, "rho": rho}))
        elif suite == "shell_oracle":
            for fi in range(len(sec["forms"])):
                cells.append(("shell_oracle", {"form": fi, "t_max": int(sec.get("t_max", 60))}))
    elif cfg.command == "pipeline":
        for fi in range(len(sec["forms"])):
            cells.append(("pipeline", {"form": fi}))
    elif cfg.command == "diag":
        for i in range(len(sec.get("d_lambda", []))):
            cells.append(("d_lambda", {"index": i}))
        for i in range(len(sec.get("validate_M", []))):
            cells.append(("validate_M", {"index": i}))
        for i in range(len(sec.get("amplification", []))):
            cells.append(("amplification", {"index": i}))
    return cells


def _run_cell(cfg: ExperimentConfig, index: int, kind: str, params: dict) -> CellResult:
    start = time.perf_counter()
    res = _CELL_RUNNERS[kind](cfg, f"{kind}-{index:04d}", params)
    if cfg.timing:
        ms = str(round((time.perf_counter() - start) * 1000))
        for r in res.rows:
            r["millis"] = ms
    return res


def _form(cfg: ExperimentConfig, index: int) -> SelfAdjointMatrix:
    errors: list[str] = []
    rng = random.Random(cfg.seed * 1_000_003 + index)
    q = _form_matrix(cfg.section["forms"][index], cfg.n, rng, "", errors)
    if q is None:
        raise ConfigError(errors)
    return q


def _prime(s: str) -> SplitPrime:
    return SplitPrime.from_gaussian(parse_gaussian(s))


def _cell_count(cfg, qid, p) -> CellResult:
    sec = cfg.section
    q = _form(cfg, p["form"])
    pi, pi2, m = _prime(p["pi"]), _prime(p["pi2"]), parse_gaussian(p["m"])
    M = sec.get("M", EXACT)
    spec = HeckeCosetSpec(pi, pi2, p["nu"], cfg.n)
    if any(valuation(m, x) != 0 for x in spec.primes()):
        return CellResult([_row(qid, cfg.n, q, pi, pi2, p["nu"], M, "", "", "skipped")], [{"query_id": qid, "skipped": "m not coprime to the primes"}])
    members = enumerate_S(CountQuery(q, spec, M, m))
    bound, passed = "", ""
    consts = sec.get("constants")
    if consts is not None:
        if spec.same_prime:
            b = one_prime_bound(cfg.n, p["nu"], pi.p, m, denominator_lcm(q.diagonal()), consts["C"], consts["eps"])
        else:
            b = 0.0
        bound, passed = _fmt_bound(b), str(len(members) <= b).lower()
    detail = {"query_id": qid, "q": q.to_json(), **spec.to_json(), "M": M, "m": str(m), "count": len(members), "reason": members.reason}
    if sec.get("witnesses"):
        detail["witnesses"] = [g.to_json() for g in members]
    return CellResult([_row(qid, cfg.n, q, pi, pi2, p["nu"], M, len(members), bound, passed)], [detail])


def _cell_lemma35(cfg, qid, p) -> CellResult:
    q = _form(cfg, p["form"])
    pi, pi2, m = _prime(p["pi"]), _prime(p["pi2"]), parse_gaussian(p["m"])
    if pi.p == pi2.p or any(valuation(m, x) != 0 for x in (pi, pi2)) or any(
        valuation(x, pr) != 0 for x in q.diagonal() for pr in (pi, pi2)
    ):
        return CellResult([_row(qid, cfg.n, q, pi, pi2, p["nu"], EXACT, "", "", "skipped")], [{"query_id": qid, "skipped": "coprimality"}])
    rep = verify_two_primes_empty(q, pi, pi2, p["nu"], m)
    return CellResult(
        [_row(qid, cfg.n, q, pi, pi2, p["nu"], EXACT, rep.count, "", str(rep.passed).lower())],
        [{"query_id": qid, **rep.to_json()}],
        rep.passed,
    )


def _cell_lemma34(cfg, qid, p) -> CellResult:
    sec = cfg.section
    q = _form(cfg, p["form"])
    pi, m = _prime(p["pi"]), parse_gaussian(p["m"])
    consts = sec.get("constants", {"C": 10.0, "eps": 0.5})
    rep = verify_one_prime_bound(q, pi, p["nu"], m, consts["C"], consts["eps"])
    # the bound column is filled only for explicitly configured constants
    bound = _fmt_bound(rep.check("count_bound").details["bound"]) if "constants" in sec else ""
    return CellResult(
        [_row(qid, cfg.n, q, pi, pi, p["nu"], EXACT, rep.count, bound, str(rep.passed).lower())],
        [{"query_id": qid, **rep.to_json()}],
        rep.passed,
    )


def _cell_polarization(cfg, qid, p) -> CellResult:
    pi = SplitPrime.above(p["p"])
    rep = exhaustive_polarization(pi, p["rho"], p["dim"], default_forms(p["dim"]))
    info = rep.to_json()
    return CellResult(
        [_row(qid, p["dim"], None, pi, "", "", "", info.get("pairs", ""), "", str(rep.passed).lower())],
        [{"query_id": qid, "rho": p["rho"], **info}],
        rep.passed,
    )


def naive_shell(q: SelfAdjointMatrix, t: int) -> set[tuple[GaussianInt, ...]]:
    """All y with y^*Qy = t by scanning the box |y_k|^2 <= t (Q^-1)_kk."""
    n = q.n
    qi = q.inverse()
    bounds = [math.floor(t * qi.rows[k][k].real) for k in range(n)]
    coords = []
    for B in bounds:
        r = math.isqrt(B)
        coords.append([GaussianInt(a, b) for a in range(-r, r + 1) for b in range(-r, r + 1) if a * a + b * b <= B])
    return {y for y in product(*coords) if hermitian_form(q, y, y) == t}


def _cell_shell_oracle(cfg, qid, p) -> CellResult:
    q = _form(cfg, p["form"])
    mismatches, total = [], 0
    for t in range(p["t_max"] + 1):
        got = enumerate_shell(ShellQuery(q, Fraction(t)))
        total += len(got)
        if set(got) != naive_shell(q, t) or len(set(got)) != len(got):
            mismatches.append(t)
    ok = not mismatches
    return CellResult(
        [_row(qid, cfg.n, q, "", "", "", "", total, "", str(ok).lower())],
        [{"query_id": qid, "q": q.to_json(), "t_max": p["t_max"], "vectors": total, "mismatched_targets": mismatches}],
        ok,
    )


def _cell_pipeline(cfg, qid, p) -> CellResult:
    sec = cfg.section
    q = _form(cfg, p["form"])
    primes = _prime_list(sec["primes"], "", [])
    eg = _endgame(sec.get("endgame", {}), cfg.n)
    trace = run_pipeline(q, eg, primes)
    out = trace.to_json()
    ok = trace.passed
    injected = []
    for inj in sec.get("inject", []):
        g, spec = _injected(inj, cfg.n)
        in_q2 = membership_test(g, CountQuery(trace.q2, spec, EXACT))
        injected.append({**spec.to_json(), "gamma": g.to_json(), "in_S_Q2": in_q2})
        ok &= in_q2
    out["injected"] = injected
    rows = []
    for c in trace.counts:
        rows.append(
            _row(qid, cfg.n, q, c["pi"], c["pi2"], c["nu"], eg.M, c.get("count_q_M", ""),
                 c.get("count_q3_m", ""), str(c.get("chain", "")).lower() if "chain" in c else "skipped")
        )
    rows.append(_row(qid, cfg.n, q, "", "", "", eg.M, "", "", str(ok).lower()))
    return CellResult(rows, [{"query_id": qid, **out}], ok)


def _cell_d_lambda(cfg, qid, p) -> CellResult:
    mu = [_number(x) for x in cfg.section["d_lambda"][p["index"]]]
    v = d_lambda(mu)
    return CellResult([_row(qid, len(mu), bound=str(v))], [{"query_id": qid, "mu": [str(x) for x in mu], "d_lambda": str(v)}])


def _cell_validate_M(cfg, qid, p) -> CellResult:
    d = cfg.section["validate_M"][p["index"]]
    eg = _endgame(d, d.get("n", cfg.n))
    ok = validate_M(eg)
    return CellResult(
        [_row(qid, eg.n, M=eg.M, bound=str(m_threshold(eg)), passed=str(ok).lower())],
        [{"query_id": qid, **eg.to_json(), "threshold": m_threshold(eg), "valid": ok}],
    )


def _cell_amplification(cfg, qid, p) -> CellResult:
    d = cfg.section["amplification"][p["index"]]
    counts = {(c["pi"], c.get("pi2", c["pi"]), int(c["nu"])): int(c["count"]) for c in d["counts"]}
    d_mu = math.inf if d["d_mu_star"] == "inf" else float(d["d_mu_star"])
    v = amplification_diagnostic(counts, float(d["L"]), int(d["P_size"]), d_mu, float(d["kappa"]), float(d["K_amp"]), int(d.get("n", cfg.n)))
    return CellResult([_row(qid, d.get("n", cfg.n), bound=_fmt_bound(v))], [{"query_id": qid, "value": v}])


_CELL_RUNNERS = {
    "count": _cell_count,
    "lemma35": _cell_lemma35,
    "lemma34": _cell_lemma34,
    "polarization": _cell_polarization,
    "shell_oracle": _cell_shell_oracle,
    "pipeline": _cell_pipeline,
    "d_lambda": _cell_d_lambda,
    "validate_M": _cell_validate_M,
    "amplification": _cell_amplification,
}


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


@dataclass
class RunOutcome:
    status: int
    rows: list[dict]
    summary: dict
    messages: list[str] = field(default_factory=list)


def resolve_jobs(requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def execute(cfg: ExperimentConfig, jobs: int = 1) -> RunOutcome:
    cells = _cells(cfg)
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell, cfg, i, kind, params) for i, (kind, params) in enumerate(cells)]
            results = [f.result() for f in futures]
    else:
        results = [_run_cell(cfg, i, kind, params) for i, (kind, params) in enumerate(cells)]
    rows = [r for res in results for r in res.rows]
    hard_ok = all(res.hard_ok for res in results)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "source": cfg.source,
        "n": cfg.n,
        "seed": cfg.seed,
        "cells": len(cells),
        "hard_checks_passed": hard_ok,
        "results": [d for res in results for d in res.details],
    }
    return RunOutcome(EXIT_OK if hard_ok else EXIT_FAILED, rows, summary)


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def run_experiments(
    cfg: ExperimentConfig | dict,
    out_dir: str | os.PathLike,
    jobs: int | None = None,
    command: str | None = None,
) -> RunOutcome:
    """Validate, run and write ``<command>.csv`` and ``<command>.json`` to out_dir.

    Exit status: 0 when every hard check passes, 1 when one fails, 2 for an
    invalid configuration (nothing is written), 3 for I/O errors.
    """
    if not isinstance(cfg, ExperimentConfig):
        try:
            cfg = parse_config(cfg, command)
        except ConfigError as exc:
            return RunOutcome(EXIT_CONFIG, [], {}, exc.errors)
    outcome = execute(cfg, resolve_jobs(jobs))
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.command}.csv").write_text(rows_to_csv(outcome.rows))
        (out / f"{cfg.command}.json").write_text(json.dumps(outcome.summary, indent=2, default=str) + "\n")
    except OSError as exc:
        return RunOutcome(EXIT_IO, outcome.rows, outcome.summary, [f"output: {exc}"])
    return outcome
