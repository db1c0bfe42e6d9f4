"""The seven acceptance criteria, each at its stated tolerance and time limit.

Every test records a single PASS/FAIL line; the lines are printed together in
the terminal summary and also written to stdout as each test finishes.
"""

import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from conftest import ACCEPTANCE_RESULTS
from heckecount.enumeration import ShellQuery, enumerate_shell
from heckecount.experiments import d_lambda
from heckecount.gaussian import GaussianRational, SplitPrime, parse_gaussian, parse_gaussian_rational
from heckecount.hecke import EXACT, CountQuery, HeckeCosetSpec, enumerate_S, verify_one_prime_bound, verify_two_primes_empty
from heckecount.linalg import GaussMatrix, SelfAdjointMatrix, denominator_lcm, gram_schmidt_diagonalize
from heckecount.pipeline import EndgameConfig, m_threshold, run_pipeline, validate_M
from heckecount.polarization import default_forms, exhaustive_polarization

import oracles
from strategies import to_pairs

P5, P13, P17 = (SplitPrime.from_gaussian(parse_gaussian(s)) for s in ("2+i", "3+2i", "4+i"))


@contextmanager
def criterion(number: int, title: str, limit_s: float):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < limit_s, f"took {elapsed:.1f}s, limit {limit_s}s"
        status = "PASS"
    finally:
        line = f"criterion {number} {status}: {title} ({time.perf_counter() - start:.1f}s, limit {limit_s:g}s)"
        ACCEPTANCE_RESULTS.append(line)
        print(line)


def as_tuples(members):
    return sorted(tuple(tuple((x.num.re, x.num.im) for x in row) for row in g.rows) for g in members)


def test_1_polarization_exhaustive():
    with criterion(1, "polarization exhaustive, p = 5, rho in {1, 2}, n in {2, 3}", 60):
        for n in (2, 3):
            forms = default_forms(n)
            assert len(forms) == 10
            for rho in (1, 2):
                rep = exhaustive_polarization(P5, rho, n, forms)
                assert rep.pairs > 0
                assert rep.violations == [], rep.violations[:3]


def test_2_shell_oracle_equivalence():
    with criterion(2, "shell enumeration equals box enumeration, t <= 60", 30):
        ident = SelfAdjointMatrix.identity(2)
        assert len(enumerate_shell(ShellQuery(ident, Fraction(5)))) == 48
        for q in (ident, SelfAdjointMatrix.diag([1, 2]), SelfAdjointMatrix.diag([1, 5])):
            table = oracles.box_values(to_pairs(q), 60)
            for t in range(61):
                got = sorted(tuple((z.re, z.im) for z in y) for y in enumerate_shell(ShellQuery(q, Fraction(t))))
                assert got == sorted(table.get(Fraction(t), [])), (q, t)


def test_3_two_prime_grid_is_empty():
    with criterion(3, "distinct-prime grid: every count is 0", 300):
        cases = 0
        for diag in ([1, 1], [1, 2], [2, 3]):
            q = SelfAdjointMatrix.diag(diag)
            for pi2 in (P13, P17):
                for nu in (1, 2):
                    for m in (1, 3):
                        rep = verify_two_primes_empty(q, P5, pi2, nu, parse_gaussian(str(m)))
                        assert rep.count == 0 and rep.passed
                        assert rep.method == ("symbolic" if nu == 1 else "enumeration")
                        cases += 1
        assert cases == 24


def test_4_one_prime_counts():
    with criterion(4, "one-prime exact counts and column-set checks", 120):
        for diag, expected in (([1, 5], 4), ([1, 1], 0)):
            q = SelfAdjointMatrix.diag(diag)
            members = enumerate_S(CountQuery(q, HeckeCosetSpec(P5, P5, 1, 2), EXACT))
            assert len(members) == expected
            assert as_tuples(members) == oracles.hecke_oracle(diag, (2, 1), (2, 1), 1)
            rep = verify_one_prime_bound(q, P5, 1, 1, 10.0, 0.5)
            assert rep.count == expected
            assert rep.check("polarized_divisibility").passed
            assert rep.check("angle_separation").passed


def _random_positive_definite(rng: random.Random, n: int) -> SelfAdjointMatrix:
    rows = [[None] * n for _ in range(n)]
    for j in range(n):
        for k in range(j + 1, n):
            rows[j][k] = GaussianRational.from_fractions(
                Fraction(rng.randint(-40, 40), rng.randint(1, 20)), Fraction(rng.randint(-40, 40), rng.randint(1, 20))
            )
            rows[k][j] = rows[j][k].conj()
    for j in range(n):
        off = sum((abs(rows[j][k].real) + abs(rows[j][k].imag) for k in range(n) if k != j), Fraction(0))
        den = rng.randint(1, 20)
        rows[j][j] = GaussianRational.from_fractions(Fraction(int(off * den) + rng.randint(1, 40), den))
    return SelfAdjointMatrix(tuple(tuple(r) for r in rows))


def test_5_gram_schmidt_exactness():
    with criterion(5, "Gram-Schmidt exactness on 100 random forms", 30):
        rng = random.Random(20240601)
        for _ in range(100):
            q = _random_positive_definite(rng, rng.randint(1, 4))
            assert q.is_positive_definite()
            r = gram_schmidt_diagonalize(q)
            assert r.U.adjoint() @ q @ r.U == r.q3
            assert r.q3.is_diagonal() and r.q3.det() == q.det()
            assert all(x > 0 for x in r.q3.diagonal())
            for s in r.steps:
                if s.multiplier:
                    assert 0 < s.pivot_after < s.pivot_before
        q = SelfAdjointMatrix(((GaussianRational(2), parse_gaussian_rational("i")),
                               (parse_gaussian_rational("-i"), GaussianRational(1))))
        r = gram_schmidt_diagonalize(q)
        assert r.q3 == SelfAdjointMatrix.diag([2, Fraction(1, 2)])
        assert denominator_lcm(r.U) * denominator_lcm(r.U.inverse()) == 4


def test_6_pipeline_chain():
    with criterion(6, "pipeline chain on toy windows for three forms", 300):
        forms = {
            "identity": SelfAdjointMatrix.identity(2),
            "diag(1,5)": SelfAdjointMatrix.diag([1, 5]),
            "[[2,i],[-i,1]]": SelfAdjointMatrix(((GaussianRational(2), parse_gaussian_rational("i")),
                                                 (parse_gaussian_rational("-i"), GaussianRational(1)))),
        }
        for name, q in forms.items():
            trace = run_pipeline(q, EndgameConfig(), [P5, P13])
            assert trace.passed, (name, [c.name for c in trace.checks if c.hard and not c.passed])
            assert trace.j is not None and trace.k is not None
            assert trace.q3.is_diagonal() and trace.m is not None
            assert all(x.den >= 1 for row in trace.q2.rows for x in row)
            for name_ in ("chain inequalities", "U-conjugation injects into S_m(Q3)", "harvested members lie in S(Q2, oo)"):
                assert trace.check(name_).passed
            if name == "identity":
                assert trace.q2 == trace.q3 == q and trace.m == 1
            if name == "diag(1,5)":
                row = next(c for c in trace.counts if c["pi"] == str(P5) and c["pi2"] == str(P5) and c["nu"] == 1)
                assert row["count_q_M"] == row["count_q2"] == row["count_q3_m"] == 4
            if name == "[[2,i],[-i,1]]":
                assert trace.q3 == SelfAdjointMatrix.diag([2, Fraction(1, 2)]) and trace.m == 4


def test_7_diagnostics():
    with criterion(7, "d_lambda values and the M threshold", 1):
        assert d_lambda((1, -1)) == 9
        assert d_lambda((1, 0, -1)) == 144
        cfg = EndgameConfig(n=2, D=2, E=2, M=40961, T=10)
        assert m_threshold(cfg) == 40961
        assert validate_M(cfg)
        assert not validate_M(EndgameConfig(n=2, D=2, E=2, M=40960, T=10))
