from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from heckecount.gaussian import GaussianRational, SplitPrime, parse_gaussian, parse_gaussian_rational
from heckecount.hecke import HeckeCosetSpec, det_power
from heckecount.linalg import GaussMatrix, SelfAdjointMatrix, gram_schmidt_diagonalize
from heckecount.pipeline import (
    EndgameConfig,
    Envelope,
    IrrationalDetPowerError,
    NoPointFound,
    SubspaceBasis,
    b_gamma_operator,
    coordinates,
    cumulative_windows,
    default_envelope,
    distance_to_subspace,
    envelopes,
    frobenius,
    from_coordinates,
    kernel_intersection,
    m_threshold,
    project,
    q_from_point,
    rational_point_in_envelope,
    rational_point_with_escalation,
    run_pipeline,
    standard_basis,
    validate_M,
)

from strategies import gaussian_rationals, positive_definite, rational_matrices

P5, P13 = SplitPrime.above(5), SplitPrime.above(13)


def G(*rows):
    return GaussMatrix(tuple(tuple(parse_gaussian_rational(x) for x in row) for row in rows))


def H(*rows):
    return SelfAdjointMatrix.from_matrix(G(*rows))


def span(*mats):
    return SubspaceBasis(mats[0].n, tuple(mats))


class TestQFromPoint:
    @pytest.mark.parametrize(
        "g, expected",
        [
            (G(["1", "0"], ["0", "1"]), H(["1", "0"], ["0", "1"])),
            (G(["1", "0"], ["0", "2"]), H(["2", "0"], ["0", "1/2"])),
            (G(["1", "1"], ["0", "1"]), H(["1", "-1"], ["-1", "2"])),
        ],
    )
    def test_examples(self, g, expected):
        assert q_from_point(g) == expected

    def test_irrational_det_power(self):
        with pytest.raises(IrrationalDetPowerError):
            q_from_point(G(["1", "0"], ["0", "2+i"]))

    @settings(max_examples=30)
    @given(rational_matrices(n=2))
    def test_positive_definite_with_unit_det(self, g):
        d = g.det()
        if not d or not _is_square(d.norm()):
            return
        q = q_from_point(g)
        assert q.is_positive_definite() and q.det() == 1


def _is_square(x: Fraction) -> bool:
    from math import isqrt

    return isqrt(x.numerator) ** 2 == x.numerator and isqrt(x.denominator) ** 2 == x.denominator


class TestCoordinates:
    @given(positive_definite(max_n=3))
    def test_roundtrip(self, q):
        assert from_coordinates(coordinates(q), q.n) == q

    @given(positive_definite(n=2), positive_definite(n=2))
    def test_frobenius_is_trace_form(self, a, b):
        tr = sum(((a @ b).rows[j][j] for j in range(2)), GaussianRational(0))
        assert tr.imag == 0 and frobenius(a, b) == tr.real


class TestOperators:
    def test_identity_gives_zero(self):
        assert b_gamma_operator(GaussMatrix.identity(2), 1).is_zero()
        assert kernel_intersection([b_gamma_operator(GaussMatrix.identity(2), 1)]).dim == 4

    def test_scalar_prime_gives_zero(self):
        assert b_gamma_operator(G(["2+i", "0"], ["0", "2+i"]), 5).is_zero()

    def test_diagonal_action(self):
        op = b_gamma_operator(G(["1", "0"], ["0", "3+4i"]), 5)
        e11 = standard_basis(2)[0]
        assert op.apply(e11) == e11.scale(-4)
        assert kernel_intersection([op]).dim == 0

    def test_accepts_det_power(self):
        sp = HeckeCosetSpec(P5, P5, 1, 2)
        assert b_gamma_operator(G(["0", "-3-4i"], ["1", "0"]), det_power(sp)).n == 2
        with pytest.raises(IrrationalDetPowerError):
            b_gamma_operator(GaussMatrix.identity(2), det_power(HeckeCosetSpec(P5, P13, 1, 2)))

    def test_empty_list_is_full_space(self):
        assert kernel_intersection([], n=3).dim == 9

    @settings(max_examples=20)
    @given(st.lists(rational_matrices(n=2), min_size=1, max_size=3), st.data())
    def test_kernel_correctness(self, gs, data):
        ops = [b_gamma_operator(g, 1) for g in gs]
        h = kernel_intersection(ops)
        for b in h.basis:
            assert all(op.apply(b) == SelfAdjointMatrix.diag([0, 0]) for op in ops)
        # a random combination of the basis is in the kernel; a random element outside the span is not
        coeffs = [data.draw(st.fractions(max_denominator=5)) for _ in h.basis]
        comb = from_coordinates([sum((c * x for c, x in zip(coeffs, col)), Fraction(0))
                                 for col in zip(*[coordinates(b) for b in h.basis])] or [0] * 4, 2)
        assert all(op.apply(comb) == SelfAdjointMatrix.diag([0, 0]) for op in ops)
        other = data.draw(positive_definite(n=2))
        in_kernel = all(op.apply(other) == SelfAdjointMatrix.diag([0, 0]) for op in ops)
        assert in_kernel == h.contains(other)

    @settings(max_examples=20)
    @given(st.lists(rational_matrices(n=2), min_size=2, max_size=4))
    def test_dimension_chain(self, gs):
        dims = [kernel_intersection([b_gamma_operator(g, 1) for g in gs[:t]], n=2).dim for t in range(len(gs) + 1)]
        assert dims == sorted(dims, reverse=True)


class TestDistances:
    def test_member_has_zero_distance(self):
        h = span(H(["1", "0"], ["0", "0"]), H(["0", "0"], ["0", "1"]))
        assert distance_to_subspace(H(["3", "0"], ["0", "7"]), h).squared == 0

    def test_zero_space(self):
        q = H(["2", "1"], ["1", "1"])
        assert distance_to_subspace(q, SubspaceBasis(2, ())).squared == frobenius(q, q)

    def test_example(self):
        d = distance_to_subspace(H(["2", "0"], ["0", "1"]), span(H(["1", "0"], ["0", "0"])))
        assert d.value == 1 and d.residual == H(["0", "0"], ["0", "1"])

    @given(positive_definite(n=2), positive_definite(n=2))
    def test_zero_iff_in_span(self, a, q):
        h = span(a)
        assert (distance_to_subspace(q, h).squared == 0) == (project(q, h) == q)
        assert distance_to_subspace(a.scale(3), h).squared == 0


class TestEnvelopes:
    def test_examples(self):
        o1, o2 = envelopes(Envelope(Fraction(1), Fraction(1), 2))
        assert (o1.lo, o1.hi, o2.lo, o2.hi) == (Fraction(1, 2), 2, Fraction(1, 8), 2)
        o1, o2 = envelopes(Envelope(Fraction(2), Fraction(3), 2))
        assert (o1.lo, o1.hi, o2.lo, o2.hi) == (1, 6, Fraction(1, 6), 6)

    @given(st.fractions(min_value=Fraction(1, 10), max_value=10), st.fractions(min_value=0, max_value=10),
           st.fractions(min_value=Fraction(1, 10), max_value=10))
    def test_homogeneous_and_nested(self, a, width, c):
        env = Envelope(a, a + width, 2)
        o1, o2 = envelopes(env)
        s1, s2 = envelopes(env.scaled(c))
        assert (s1.lo, s1.hi, s2.lo, s2.hi) == (c * o1.lo, c * o1.hi, c * o2.lo, c * o2.hi)
        assert o1.lo <= env.lo and env.hi <= o1.hi

    @settings(max_examples=50)
    @given(positive_definite(max_n=3))
    def test_gram_schmidt_stays_in_omega2(self, q):
        o1, o2 = envelopes(default_envelope(q))
        if o1.contains_interior(q):
            assert all(o2.lo <= x <= o2.hi for x in gram_schmidt_diagonalize(q).q3.diagonal())

    def test_interior_is_strict(self):
        env = Envelope(Fraction(1), Fraction(2), 2)
        assert env.contains_interior(H(["3/2", "0"], ["0", "3/2"]))
        assert not env.contains_interior(H(["1", "0"], ["0", "3/2"]))


class TestRationalPoints:
    ENV = Envelope(Fraction(1, 2), Fraction(2), 2)

    def test_full_space(self):
        assert rational_point_in_envelope(SubspaceBasis.full(2), self.ENV, 1, GaussMatrix.identity(2)) == H(["1", "0"], ["0", "1"])

    def test_projection_onto_identity(self):
        got = rational_point_in_envelope(span(H(["1", "0"], ["0", "1"])), self.ENV, 2, H(["2", "0"], ["0", "1"]))
        assert got == H(["3/2", "0"], ["0", "3/2"])

    def test_seed_already_good(self):
        h = span(H(["1", "0"], ["0", "0"]), H(["0", "0"], ["0", "1"]))
        got = rational_point_in_envelope(h, self.ENV, 12, H(["2/3", "0"], ["0", "5/4"]))
        assert got == H(["2/3", "0"], ["0", "5/4"])

    def test_no_point(self):
        with pytest.raises(NoPointFound):
            rational_point_in_envelope(span(H(["1", "0"], ["0", "-1"])), self.ENV, 8, GaussMatrix.identity(2))

    def test_escalation_finds_finer_point(self):
        env = Envelope(Fraction(30, 100), Fraction(34, 100), 2)
        got, bound = rational_point_with_escalation(span(H(["1", "0"], ["0", "1"])), env, H(["1/3", "0"], ["0", "1/3"]))
        assert env.contains_interior(got) and bound >= 1


class TestConfig:
    def test_threshold(self):
        assert m_threshold(EndgameConfig(n=2, D=2, E=2, M=1, T=10)) == 40961
        assert validate_M(EndgameConfig(n=2, D=2, E=2, M=40961, T=10))
        assert not validate_M(EndgameConfig(n=2, D=2, E=2, M=40960, T=10))

    @given(st.integers(1, 10 ** 6), st.integers(0, 10 ** 6))
    def test_monotone(self, M, extra):
        if validate_M(EndgameConfig(D=2, E=2, M=M, T=10)):
            assert validate_M(EndgameConfig(D=2, E=2, M=M + extra, T=10))

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            EndgameConfig(D=1)

    def test_cumulative_windows(self):
        assert cumulative_windows([P5, P13]) == ((5, 6), (5, 14), (5, 14))


class TestRunPipeline:
    def test_diag_1_5(self):
        trace = run_pipeline(SelfAdjointMatrix.diag([1, 5]), EndgameConfig(), [P5, P13])
        assert trace.passed
        assert trace.q2 == trace.q3 == SelfAdjointMatrix.diag([1, 5])
        assert trace.u == GaussMatrix.identity(2) and trace.m == 1
        row = next(c for c in trace.counts if c["pi"] == str(P5) and c["pi2"] == str(P5) and c["nu"] == 1)
        assert row["count_q_M"] == row["count_q2"] == row["count_q3_m"] == 4
        dims = trace.h_dims
        assert dims == sorted(dims, reverse=True)

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError):
            run_pipeline(SelfAdjointMatrix.identity(3), EndgameConfig(), [P5])
