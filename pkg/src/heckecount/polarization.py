"""Scalar congruence witnesses and the polarization congruence.

For vectors x, y over Z[i] whose 2x2 minors are divisible by pi^rho, y is a
rational-integer multiple of x modulo pi^rho.  From that scalar a we derive b
(with b = a*i mod pi^rho) and the inverses a', b' mod p^rho, and check

    2 x^* A y = (a - b i) x^* A x + (a' - b' i) y^* A y   (mod p^rho)

together with pi^rho | a' - b' i and conj(pi)^rho | a - b i.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gaussian import (
    GaussianInt,
    GaussianRational,
    SplitPrime,
    integer_residue,
    pi_power_divides,
    valuation,
)
from .linalg import GaussMatrix, SelfAdjointMatrix, hermitian_form


class PolarizationPreconditionError(ValueError):
    pass


class ValuationPreconditionError(PolarizationPreconditionError):
    """v_pi(x) or v_pi(y) is not zero."""


class MinorPreconditionError(PolarizationPreconditionError):
    """Some 2x2 minor of (x, y) is not divisible by pi^rho."""


class FormPreconditionError(PolarizationPreconditionError):
    """The form is not integral at pi and conj(pi)."""


class PolarizationInvariantError(AssertionError):
    """A verified identity failed; this indicates an arithmetic bug."""


@dataclass(frozen=True)
class PolarizationWitness:
    a: int
    b: int
    a_inv: int
    b_inv: int
    modulus: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.a, self.b, self.a_inv, self.b_inv


def _vec(v) -> tuple[GaussianInt, ...]:
    return tuple(GaussianInt.coerce(z) for z in v)


def _check_vectors(x, y, pi: SplitPrime, rho: int):
    if valuation(x, pi) != 0 or valuation(y, pi) != 0:
        raise ValuationPreconditionError("need v_pi(x) = v_pi(y) = 0")
    n = len(x)
    for j in range(n):
        for k in range(j + 1, n):
            if not pi_power_divides(x[j] * y[k] - x[k] * y[j], pi, rho):
                raise MinorPreconditionError(f"pi^{rho} does not divide the ({j + 1},{k + 1}) minor")


def scalar_witness(x, y, pi: SplitPrime, rho: int) -> int:
    """The unique a in [0, p^rho), coprime to p, with y = a x mod pi^rho."""
    x, y = _vec(x), _vec(y)
    if len(x) != len(y):
        raise ValueError("vectors differ in length")
    _check_vectors(x, y, pi, rho)
    mod = pi.p ** rho
    j = next(j for j, xj in enumerate(x) if not pi_power_divides(xj, pi, 1))
    a = integer_residue(y[j], pi, rho) * pow(integer_residue(x[j], pi, rho), -1, mod) % mod
    for xk, yk in zip(x, y):
        if not pi_power_divides(yk - xk * a, pi, rho):
            raise PolarizationInvariantError("scalar witness does not satisfy y = a x")
    return a


def witness_from_scalar(a: int, pi: SplitPrime, rho: int) -> PolarizationWitness:
    mod = pi.p ** rho
    a %= mod
    b = a * integer_residue(GaussianInt(0, 1), pi, rho) % mod
    return PolarizationWitness(a, b, pow(a, -1, mod), pow(b, -1, mod), mod)


def _congruent_zero(z: GaussianRational, pi: SplitPrime, rho: int) -> bool:
    """z = 0 mod p^rho in the localization at pi and conj(pi)."""
    if not z:
        return True
    return valuation(z, pi) >= rho and valuation(z, pi.pi.conj()) >= rho


def polarization_residual(a_mat: GaussMatrix, x, y, w: PolarizationWitness) -> GaussianRational:
    """2 x^*Ay - (a - bi) x^*Ax - (a' - b'i) y^*Ay."""
    xay = hermitian_form(a_mat, x, y)
    xax = hermitian_form(a_mat, x, x)
    yay = hermitian_form(a_mat, y, y)
    return (
        xay * 2
        - GaussianRational(GaussianInt(w.a, -w.b)) * xax
        - GaussianRational(GaussianInt(w.a_inv, -w.b_inv)) * yay
    )


def divisibility_holds(w: PolarizationWitness, pi: SplitPrime, rho: int) -> tuple[bool, bool]:
    """(pi^rho | a' - b'i, conj(pi)^rho | a - bi)."""
    return (
        pi_power_divides(GaussianInt(w.a_inv, -w.b_inv), pi, rho),
        pi_power_divides(GaussianInt(w.a, -w.b), pi.pi.conj(), rho),
    )


def polarize(a_mat: SelfAdjointMatrix, x, y, pi: SplitPrime, rho: int) -> PolarizationWitness:
    """Witness (a, b, a', b') for the polarization congruence, verified before return."""
    x, y = _vec(x), _vec(y)
    for row in a_mat.rows:
        for e in row:
            if e and (valuation(e, pi) < 0 or valuation(e, pi.pi.conj()) < 0):
                raise FormPreconditionError("form entries must be integral at pi and conj(pi)")
    w = witness_from_scalar(scalar_witness(x, y, pi, rho), pi, rho)
    if not _congruent_zero(polarization_residual(a_mat, x, y, w), pi, rho):
        raise PolarizationInvariantError("polarization congruence failed")
    if not all(divisibility_holds(w, pi, rho)):
        raise PolarizationInvariantError("conjugate divisibility failed")
    return w


# ---------------------------------------------------------------------------
# exhaustive verification over residue vectors
# ---------------------------------------------------------------------------


@dataclass
class ExhaustiveReport:
    p: int
    rho: int
    n: int
    matrices: int
    vectors: int = 0
    pairs: int = 0
    violations: list[dict] = field(default_factory=list)
    cross_checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "rho": self.rho,
            "n": self.n,
            "matrices": self.matrices,
            "vectors": self.vectors,
            "pairs": self.pairs,
            "cross_checked": self.cross_checked,
            "violations": self.violations[:20],
            "violation_count": len(self.violations),
            "pass": self.passed,
        }


def _integral_form_arrays(mats: Sequence[GaussMatrix]) -> tuple[np.ndarray, np.ndarray]:
    re = np.array([[[e.num.re for e in r] for r in m.rows] for m in mats], dtype=np.int64)
    im = np.array([[[e.num.im for e in r] for r in m.rows] for m in mats], dtype=np.int64)
    return re, im


def exhaustive_polarization(
    pi: SplitPrime,
    rho: int,
    n: int,
    matrices: Sequence[SelfAdjointMatrix],
    cross_check_every: int = 97,
) -> ExhaustiveReport:
    """Check parts (a), (b), (c) on every valid pair of residue vectors mod pi^rho.

    Residues are the rational integers 0..p^rho-1.  Pairs are selected by
    testing the hypotheses directly (valuation and minors), not by
    constructing multiples.  Part (b) is evaluated for all matrices at once in
    int64 arithmetic; every ``cross_check_every``-th pair is re-run through
    ``polarize`` in exact arithmetic.
    """
    for m in matrices:
        if not m.is_integral():
            raise FormPreconditionError("exhaustive check expects integral forms")
    p = pi.p
    mod = p ** rho
    rep = ExhaustiveReport(p, rho, n, len(matrices))
    vecs = np.array(list(itertools.product(range(mod), repeat=n)), dtype=np.int64)
    unit = (vecs % p != 0).any(axis=1)
    cand = vecs[unit]
    rep.vectors = len(cand)
    Are, Aim = _integral_form_arrays(matrices)
    r_i = integer_residue(GaussianInt(0, 1), pi, rho)
    avals = np.arange(mod, dtype=np.int64)
    pairs_seen = 0
    for xv in cand:
        ok = np.ones(len(cand), dtype=bool)
        for j in range(n):
            for k in range(j + 1, n):
                ok &= (xv[j] * cand[:, k] - xv[k] * cand[:, j]) % mod == 0
        Y = cand[ok]
        if not len(Y):
            continue
        rep.pairs += len(Y)
        # (a): exactly one a in [0, mod) with y = a x (mod p^rho), and it is a unit
        diff = (Y[:, None, :] - avals[None, :, None] * xv[None, None, :]) % mod
        hits = (diff == 0).all(axis=2)
        counts = hits.sum(axis=1)
        a_of = hits.argmax(axis=1)
        for idx in np.nonzero((counts != 1) | (a_of % p == 0))[0]:
            rep.violations.append({"part": "a", "x": xv.tolist(), "y": Y[idx].tolist()})
        a = a_of
        b = a * r_i % mod
        a_inv = np.array([pow(int(t), -1, mod) if t % p else 0 for t in a], dtype=np.int64)
        b_inv = np.array([pow(int(t), -1, mod) if t % p else 0 for t in b], dtype=np.int64)
        # (c): pi^rho | a' - b'i and conj(pi)^rho | a - bi; for integers s, t:
        # pi^rho | s + t i  <=>  s + t r = 0 (mod p^rho), conj(pi)^rho | s + t i <=> s - t r = 0
        c1 = (a_inv - b_inv * r_i) % mod == 0
        c2 = (a + b * r_i) % mod == 0
        for idx in np.nonzero(~(c1 & c2))[0]:
            rep.violations.append({"part": "c", "x": xv.tolist(), "y": Y[idx].tolist()})
        # (b): residual of the congruence for every matrix; integer vectors so x^* = x^t
        AYre = np.einsum("mjk,pk->mpj", Are, Y)
        AYim = np.einsum("mjk,pk->mpj", Aim, Y)
        Axre = np.einsum("mjk,k->mj", Are, xv)
        Axim = np.einsum("mjk,k->mj", Aim, xv)
        xay_re = np.einsum("j,mpj->mp", xv, AYre)
        xay_im = np.einsum("j,mpj->mp", xv, AYim)
        yay_re = np.einsum("pj,mpj->mp", Y, AYre)
        yay_im = np.einsum("pj,mpj->mp", Y, AYim)
        xax_re = (xv[None, :] * Axre).sum(axis=1)[:, None]
        xax_im = (xv[None, :] * Axim).sum(axis=1)[:, None]
        # (a - bi)(u + vi) = (a u + b v) + (a v - b u) i
        res_re = 2 * xay_re - (a * xax_re + b * xax_im) - (a_inv * yay_re + b_inv * yay_im)
        res_im = 2 * xay_im - (a * xax_im - b * xax_re) - (a_inv * yay_im - b_inv * yay_re)
        bad = (res_re % mod != 0) | (res_im % mod != 0)
        for m_idx, p_idx in zip(*np.nonzero(bad)):
            rep.violations.append(
                {"part": "b", "matrix": int(m_idx), "x": xv.tolist(), "y": Y[p_idx].tolist()}
            )
        for idx in range(len(Y)):
            if (pairs_seen + idx) % cross_check_every == 0:
                xg = tuple(GaussianInt(int(t)) for t in xv)
                yg = tuple(GaussianInt(int(t)) for t in Y[idx])
                w = polarize(matrices[(pairs_seen + idx) % len(matrices)], xg, yg, pi, rho)
                if w.as_tuple() != (int(a[idx]), int(b[idx]), int(a_inv[idx]), int(b_inv[idx])):
                    rep.violations.append({"part": "cross", "x": xv.tolist(), "y": Y[idx].tolist()})
                rep.cross_checked += 1
        pairs_seen += len(Y)
    return rep


def default_forms(n: int) -> list[SelfAdjointMatrix]:
    """Ten fixed integral self-adjoint matrices used by the exhaustive suite."""
    forms = [SelfAdjointMatrix.identity(n)]
    diag_sets = [[2, 3, 7], [1, 5, 25], [-1, 4, 6]]
    for ds in diag_sets:
        forms.append(SelfAdjointMatrix.diag(ds[:n]))
    offs = [(1, 1), (2, -1), (0, 3), (-2, 5), (3, 4), (1, -7)]
    for t, (re, im) in enumerate(offs):
        rows = [[GaussianInt(0)] * n for _ in range(n)]
        for j in range(n):
            rows[j][j] = GaussianInt(t + j + 1)
        for j in range(n - 1):
            rows[j][j + 1] = GaussianInt(re, im)
            rows[j + 1][j] = GaussianInt(re, -im)
        if n > 2:
            rows[0][n - 1] = GaussianInt(im, re)
            rows[n - 1][0] = GaussianInt(im, -re)
        forms.append(SelfAdjointMatrix(tuple(tuple(r) for r in rows)))
    return forms
