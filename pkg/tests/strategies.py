"""Hypothesis strategies shared by the test modules."""

from fractions import Fraction

from hypothesis import strategies as st

from heckecount.gaussian import GaussianInt, GaussianRational
from heckecount.linalg import GaussMatrix, SelfAdjointMatrix


def gaussian_ints(bound=5):
    return st.builds(GaussianInt, st.integers(-bound, bound), st.integers(-bound, bound))


def gaussian_rationals(bound=6, max_den=20):
    frac = st.builds(Fraction, st.integers(-bound * max_den, bound * max_den), st.integers(1, max_den))
    return st.builds(GaussianRational.from_fractions, frac, frac)


@st.composite
def integer_matrices(draw, n=None, bound=5):
    n = n or draw(st.integers(1, 3))
    return GaussMatrix(tuple(tuple(GaussianRational(draw(gaussian_ints(bound))) for _ in range(n)) for _ in range(n)))


@st.composite
def rational_matrices(draw, n=None, max_den=20):
    n = n or draw(st.integers(1, 3))
    return GaussMatrix(tuple(tuple(draw(gaussian_rationals(4, max_den)) for _ in range(n)) for _ in range(n)))


@st.composite
def positive_definite(draw, n=None, max_den=20, max_n=4):
    """Diagonally dominant self-adjoint matrices with entry denominators <= max_den."""
    n = n or draw(st.integers(1, max_n))
    rows = [[None] * n for _ in range(n)]
    for j in range(n):
        for k in range(j + 1, n):
            rows[j][k] = draw(gaussian_rationals(2, max_den))
            rows[k][j] = rows[j][k].conj()
    for j in range(n):
        # |re| + |im| bounds the modulus, so this diagonal dominates strictly
        off = sum((abs(rows[j][k].real) + abs(rows[j][k].imag) for k in range(n) if k != j), Fraction(0))
        extra = Fraction(draw(st.integers(1, 3 * max_den)), draw(st.integers(1, max_den)))
        d = off + extra
        d = Fraction(-((-d.numerator * max_den) // d.denominator), max_den)  # round up onto the 1/max_den grid
        rows[j][j] = GaussianRational.from_fractions(d)
    return SelfAdjointMatrix(tuple(tuple(r) for r in rows))


def to_pairs(m: GaussMatrix):
    """Matrix entries as (re, im) Fraction pairs for the oracles."""
    return [[(x.real, x.imag) for x in row] for row in m.rows]
