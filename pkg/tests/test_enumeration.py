from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from heckecount.enumeration import DependentConstraintsError, ShellQuery, enumerate_interval, enumerate_shell, enumerate_vectors
from heckecount.gaussian import GaussianInt
from heckecount.linalg import GaussMatrix, NotPositiveDefiniteError, SelfAdjointMatrix, hermitian_form

import oracles
from strategies import to_pairs

ID2 = SelfAdjointMatrix.identity(2)
FIXTURES_2 = [SelfAdjointMatrix.identity(2), SelfAdjointMatrix.diag([1, 2]), SelfAdjointMatrix.diag([1, 5])]


def tuples(vs):
    return sorted(tuple((z.re, z.im) for z in v) for v in vs)


def _from_str(rows):
    from heckecount.gaussian import parse_gaussian_rational

    return SelfAdjointMatrix(tuple(tuple(parse_gaussian_rational(x) for x in r) for r in rows))


FIXTURES_3 = [
    SelfAdjointMatrix.identity(3),
    _from_str([["3", "1+i", "0"], ["1-i", "2", "-1"], ["0", "-1", "3"]]),
    _from_str([["2", "i", "1"], ["-i", "3", "1-i"], ["1", "1+i", "3"]]),
]


class TestExamples:
    def test_identity_norm_five(self):
        assert len(enumerate_shell(ShellQuery(ID2, Fraction(5)))) == 48

    def test_constraint_forces_zero(self):
        got = enumerate_shell(ShellQuery(ID2, Fraction(1), ((GaussianInt(1), GaussianInt(0)),)))
        assert tuples(got) == sorted(((0, 0), u) for u in [(1, 0), (-1, 0), (0, 1), (0, -1)])

    def test_negative_target(self):
        assert enumerate_shell(ShellQuery(ID2, Fraction(-1))) == []

    def test_interval_zero(self):
        assert tuples(enumerate_interval(ShellQuery(ID2, (Fraction(0), Fraction(0))))) == [((0, 0), (0, 0))]

    def test_interval_around_five(self):
        got = enumerate_interval(ShellQuery(ID2, (Fraction(9, 2), Fraction(11, 2))))
        assert tuples(got) == tuples(enumerate_shell(ShellQuery(ID2, Fraction(5))))

    def test_diag_1_5_norm_five(self):
        got = tuples(enumerate_shell(ShellQuery(SelfAdjointMatrix.diag([1, 5]), Fraction(5))))
        assert len(got) == 12
        assert sum(1 for y in got if y[1] == (0, 0)) == 8

    def test_output_is_sorted_and_distinct(self):
        got = enumerate_shell(ShellQuery(SelfAdjointMatrix.diag([1, 2]), Fraction(9)))
        keys = [tuple(c for z in v for c in (z.re, z.im)) for v in got]
        assert keys == sorted(set(keys))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            enumerate_shell(ShellQuery(_from_str([["1", "2"], ["2", "1"]]), Fraction(1)))

    def test_rejects_dependent_constraints(self):
        c = (GaussianInt(1), GaussianInt(1))
        with pytest.raises(DependentConstraintsError):
            enumerate_shell(ShellQuery(ID2, Fraction(2), (c, (GaussianInt(0, 1), GaussianInt(0, 1)))))


@pytest.mark.parametrize("q", FIXTURES_2, ids=["identity", "diag12", "diag15"])
def test_oracle_equivalence_n2(q):
    table = oracles.box_values(to_pairs(q), 60)
    for t in range(61):
        assert tuples(enumerate_shell(ShellQuery(q, Fraction(t)))) == sorted(table.get(Fraction(t), []))


# the n = 3 balls grow like t^3, so the target range is capped per form to keep the run short
@pytest.mark.parametrize("q, t_max", list(zip(FIXTURES_3, (30, 40, 40))), ids=["identity", "banded", "dense"])
def test_oracle_equivalence_n3(q, t_max):
    table = oracles.box_values(to_pairs(q), t_max)
    got = tuples(enumerate_interval(ShellQuery(q, (Fraction(0), Fraction(t_max)))))
    assert got == sorted(y for ys in table.values() for y in ys)
    for t in (1, 7, 23, t_max):
        assert tuples(enumerate_shell(ShellQuery(q, Fraction(t)))) == sorted(table.get(Fraction(t), []))


@settings(max_examples=15)
@given(st.sampled_from(FIXTURES_3[1:]), st.integers(0, 24), st.integers(0, 24))
def test_interval_is_union_of_shells(q, a, b):
    lo, hi = min(a, b), max(a, b)
    union = []
    for t in range(lo, hi + 1):
        union += tuples(enumerate_shell(ShellQuery(q, Fraction(t))))
    assert tuples(enumerate_interval(ShellQuery(q, (Fraction(lo), Fraction(hi))))) == sorted(union)


@settings(max_examples=30)
@given(st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2), st.integers(1, 25))
def test_constraints_are_satisfied(a, b, c, d, t):
    x = (GaussianInt(a, b), GaussianInt(c, d))
    if not any(x):
        return
    q = FIXTURES_2[2]
    got = enumerate_shell(ShellQuery(q, Fraction(t), (x,)))
    assert all(hermitian_form(q, x, y) == 0 and hermitian_form(q, y, y) == t for y in got)
    full = [y for y in enumerate_shell(ShellQuery(q, Fraction(t))) if hermitian_form(q, x, y) == 0]
    assert tuples(got) == tuples(full)


def test_linear_pairing_constraint():
    # w . y = c with the plain bilinear pairing
    w = (GaussianInt(1), GaussianInt(0, 1))
    got = enumerate_vectors(ID2, 0, 10, [(w, GaussianInt(2))])
    assert got and all(y[0] + GaussianInt(0, 1) * y[1] == GaussianInt(2) for y in got)
    brute = [y for y in enumerate_interval(ShellQuery(ID2, (Fraction(0), Fraction(10))))
             if y[0] + GaussianInt(0, 1) * y[1] == GaussianInt(2)]
    assert tuples(got) == tuples(brute)
