from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from heckecount.gaussian import UNITS, GaussianInt, SplitPrime, integer_residue, valuation
from heckecount.linalg import SelfAdjointMatrix
from heckecount.polarization import (
    FormPreconditionError,
    MinorPreconditionError,
    PolarizationWitness,
    ValuationPreconditionError,
    default_forms,
    divisibility_holds,
    exhaustive_polarization,
    polarize,
    scalar_witness,
)

import oracles
from strategies import gaussian_ints, to_pairs

PI = SplitPrime.above(5)
E1 = (GaussianInt(1), GaussianInt(0))


@st.composite
def valid_pairs(draw, n=2):
    """(x, y, rho) with v_pi(x) = 0 and y = a x + pi^rho z for a unit residue a."""
    rho = draw(st.integers(1, 2))
    x = tuple(draw(gaussian_ints(8)) for _ in range(n))
    assume(any(x) and valuation(x, PI) == 0)
    a = draw(st.integers(1, 5 ** rho - 1).filter(lambda t: t % 5))
    z = tuple(draw(gaussian_ints(4)) for _ in range(n))
    y = tuple(a * xi + PI.pi ** rho * zi for xi, zi in zip(x, z))
    assume(valuation(y, PI) == 0)
    return x, y, rho, a


class TestScalarWitness:
    def test_equal_vectors(self):
        assert scalar_witness(E1, E1, PI, 1) == 1

    def test_scalar_multiple(self):
        assert scalar_witness(E1, (GaussianInt(3), GaussianInt(0)), PI, 1) == 3

    def test_multiple_by_i(self):
        assert scalar_witness(E1, (GaussianInt(0, 1), GaussianInt(0)), PI, 1) == 3

    def test_requires_unit_valuation(self):
        with pytest.raises(ValuationPreconditionError):
            scalar_witness((GaussianInt(5), GaussianInt(0)), E1, PI, 1)

    def test_requires_minor_divisibility(self):
        with pytest.raises(MinorPreconditionError):
            scalar_witness(E1, (GaussianInt(0), GaussianInt(1)), PI, 1)

    @given(valid_pairs())
    def test_recovers_multiplier(self, case):
        x, y, rho, a = case
        assert scalar_witness(x, y, PI, rho) == a

    @given(valid_pairs())
    def test_symmetry(self, case):
        x, y, rho, a = case
        assert scalar_witness(y, x, PI, rho) == pow(a, -1, 5 ** rho)

    @given(valid_pairs(), st.sampled_from(UNITS))
    def test_unit_scaling(self, case, u):
        x, y, rho, a = case
        uy = tuple(u * yi for yi in y)
        assert scalar_witness(x, uy, PI, rho) == a * integer_residue(u, PI, rho) % 5 ** rho


class TestPolarize:
    def test_identity_example(self):
        w = polarize(SelfAdjointMatrix.identity(2), E1, E1, PI, 1)
        assert (w.a, w.b, w.a_inv, w.b_inv) == (1, 3, 1, 2)
        # pi divides a' - b'i = 1 - 2i
        assert oracles.gdivides((2, 1), (1, -2))

    def test_diagonal_example(self):
        w = polarize(SelfAdjointMatrix.diag([2, 3]), E1, E1, PI, 1)
        assert (w.a, w.b, w.a_inv, w.b_inv) == (1, 3, 1, 2)

    def test_rejects_non_integral_form(self):
        with pytest.raises(FormPreconditionError):
            polarize(SelfAdjointMatrix.diag([Fraction(1, 5), 1]), E1, E1, PI, 1)

    @given(valid_pairs(), st.integers(0, 9))
    def test_congruence_independently(self, case, which):
        x, y, rho, _ = case
        A = default_forms(2)[which]
        w = polarize(A, x, y, PI, rho)
        q = to_pairs(A)
        tx = [(z.re, z.im) for z in x]
        ty = [(z.re, z.im) for z in y]
        xay = oracles.form_pair(q, tx, ty)
        xax = oracles.form_pair(q, tx, tx)
        yay = oracles.form_pair(q, ty, ty)
        res = (2 * xay[0], 2 * xay[1])
        res = oracles.gsub(res, oracles.cmul((w.a, -w.b), xax))
        res = oracles.gsub(res, oracles.cmul((w.a_inv, -w.b_inv), yay))
        mod = 5 ** rho
        assert res[0] % mod == 0 and res[1] % mod == 0
        assert all(divisibility_holds(w, PI, rho))
        assert w.a * w.a_inv % mod == 1 and w.b * w.b_inv % mod == 1

    @given(valid_pairs(n=3), st.integers(0, 9))
    def test_three_dimensional(self, case, which):
        x, y, rho, a = case
        w = polarize(default_forms(3)[which], x, y, PI, rho)
        assert w.a == a and isinstance(w, PolarizationWitness)


def test_default_forms_fixture():
    for n in (2, 3):
        forms = default_forms(n)
        assert len(forms) == 10 and len(set(forms)) == 10
        assert all(f.is_integral() and f.n == n for f in forms)


def test_exhaustive_small():
    rep = exhaustive_polarization(PI, 1, 2, default_forms(2))
    assert rep.passed and rep.pairs > 0 and rep.cross_checked > 0
    # unit vectors mod 5 in dimension 2, each paired with its 4 nonzero multiples
    assert rep.vectors == 24 and rep.pairs == 24 * 4


def test_exhaustive_flags_a_broken_form_check():
    with pytest.raises(FormPreconditionError):
        exhaustive_polarization(PI, 1, 2, [SelfAdjointMatrix.diag([Fraction(1, 2), 1])])
