from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from heckecount.gaussian import (
    GaussianInt,
    GaussianRational,
    SplitPrime,
    divmod_gaussian,
    gaussian_gcd,
    integer_residue,
    is_locally_integral,
    parse_gaussian,
    parse_gaussian_rational,
    split_primes_in_window,
    valuation,
)

import oracles

small = st.integers(-60, 60)
gints = st.builds(GaussianInt, small, small)
nonzero = gints.filter(bool)
PI = SplitPrime.from_gaussian(GaussianInt(2, 1))


def as_tuple(z):
    return (z.re, z.im)


class TestArithmetic:
    @given(gints, gints)
    def test_norm_multiplicative(self, z, w):
        assert (z * w).norm() == z.norm() * w.norm()

    @given(gints, nonzero)
    def test_division_with_remainder(self, a, b):
        q, r = divmod_gaussian(a, b)
        assert q * b + r == a
        assert r.norm() < b.norm()

    @given(gints, gints)
    def test_gcd_matches_brute_force(self, a, b):
        assume(a or b)
        g = gaussian_gcd(a, b)
        assert as_tuple(g) == oracles.ggcd(as_tuple(a), as_tuple(b))

    def test_gcd_of_zeros_rejected(self):
        with pytest.raises(ArithmeticError):
            gaussian_gcd(GaussianInt(0), GaussianInt(0))

    @pytest.mark.parametrize(
        "a, b, expected",
        [("5", "2+i", "2+i"), ("3+4i", "2+i", "2+i"), ("0", "-3i", "3"), ("-1-i", "0", "1+i")],
    )
    def test_gcd_examples(self, a, b, expected):
        assert gaussian_gcd(parse_gaussian(a), parse_gaussian(b)) == parse_gaussian(expected)

    @given(st.fractions(max_denominator=50), st.fractions(max_denominator=50))
    def test_rational_parse_roundtrip(self, re, im):
        z = GaussianRational.from_fractions(re, im)
        assert parse_gaussian_rational(str(z)) == z
        assert (z.real, z.imag) == (re, im)


class TestValuation:
    @pytest.mark.parametrize(
        "x, expected",
        [(GaussianInt(5), 1), (GaussianInt(1), 0), ((GaussianInt(5), GaussianInt(2, 1)), 1), (Fraction(1, 5), -1)],
    )
    def test_examples(self, x, expected):
        assert valuation(x, PI) == expected

    @given(nonzero, nonzero)
    def test_additive(self, z, w):
        assert valuation(z * w, PI) == valuation(z, PI) + valuation(w, PI)

    @given(nonzero)
    def test_matches_repeated_division(self, z):
        assert valuation(z, PI) == oracles.gval(as_tuple(z), (2, 1))

    def test_zero_rejected(self):
        with pytest.raises(ArithmeticError):
            valuation(GaussianInt(0), PI)

    @pytest.mark.parametrize("x, expected", [(Fraction(1, 3), True), (Fraction(1, 5), False), (0, True)])
    def test_local_integrality(self, x, expected):
        assert is_locally_integral(x, PI, SplitPrime.from_gaussian(GaussianInt(3, 2))) is expected


class TestSplitPrimes:
    @pytest.mark.parametrize(
        "c1, c2, expected",
        [(2, 10, ["2+i"]), (10, 20, ["3+2i", "4+i"]), (5, 5, [])],
    )
    def test_windows(self, c1, c2, expected):
        assert [p.pi for p in split_primes_in_window(c1, c2)] == [parse_gaussian(s) for s in expected]

    @given(st.integers(2, 200), st.integers(0, 200), st.integers(0, 200))
    def test_window_union(self, c1, d1, d2):
        c2, c3 = c1 + d1, c1 + d1 + d2
        left = set(split_primes_in_window(c1, c2)) | set(split_primes_in_window(c2, c3))
        assert left == set(split_primes_in_window(c1, c3))

    @pytest.mark.parametrize("p", [5, 13, 17, 29, 37, 41, 101, 9973])
    def test_normalized(self, p):
        pi = SplitPrime.above(p)
        assert pi.pi.norm() == p and pi.pi.re > pi.pi.im > 0

    @pytest.mark.parametrize("bad", ["1+2i", "3", "1+i"])
    def test_rejects_unnormalized_or_inert(self, bad):
        with pytest.raises(ValueError):
            SplitPrime.from_gaussian(parse_gaussian(bad))


class TestIntegerResidue:
    @pytest.mark.parametrize("z, rho, expected", [("i", 1, 3), ("5", 1, 0), ("i", 2, 18)])
    def test_examples(self, z, rho, expected):
        assert integer_residue(parse_gaussian(z), PI, rho) == expected

    @pytest.mark.parametrize("rho", [1, 2])
    def test_ring_map_exhaustive(self, rho):
        mod = 5 ** rho
        zs = [GaussianInt(a, b) for a in range(mod) for b in range(0, mod, 3)]
        res = {z: integer_residue(z, PI, rho) for z in zs}
        for z in zs[::7]:
            for w in zs[::5]:
                assert integer_residue(z + w, PI, rho) == (res[z] + res[w]) % mod
                assert integer_residue(z * w, PI, rho) == (res[z] * res[w]) % mod

    @given(nonzero, st.integers(1, 3))
    def test_residue_detects_valuation(self, z, rho):
        r = integer_residue(z, PI, rho)
        for e in range(1, rho + 1):
            assert (r % 5 ** e == 0) == (valuation(z, PI) >= e)

    @given(gints, st.integers(1, 3))
    def test_residue_is_congruent(self, z, rho):
        r = integer_residue(z, PI, rho)
        assert oracles.gdivides(oracles.gpow((2, 1), rho), as_tuple(z - GaussianInt(r)))
