"""Complete enumeration of Gaussian-integer vectors on shells of Hermitian forms.

The form is realified to a symmetric rational matrix on Z^{2n} and searched
depth first (Fincke-Pohst) using an exact LDL^t decomposition, so that every
bound is a rational comparison.  Linear side conditions are eliminated first by
parametrizing their integer solution set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt, lcm
from typing import Sequence

from .gaussian import GaussianInt, GaussianRational
from .linalg import (
    GaussMatrix,
    NotPositiveDefiniteError,
    SelfAdjointMatrix,
    from_real_coordinates,
    integer_affine_solutions,
    realify,
    solve_rational,
)

Vector = tuple[GaussianInt, ...]


class DependentConstraintsError(ValueError):
    pass


@dataclass(frozen=True)
class ShellQuery:
    """y with y^* a y on the target (or in [t1, t2]) and x_j^* a y = 0 for each constraint."""

    a: SelfAdjointMatrix
    target: Fraction | tuple[Fraction, Fraction]
    constraints: tuple[tuple[GaussianInt, ...], ...] = field(default=())

    @property
    def bounds(self) -> tuple[Fraction, Fraction]:
        if isinstance(self.target, tuple):
            lo, hi = self.target
            return Fraction(lo), Fraction(hi)
        t = Fraction(self.target)
        return t, t


# ---------------------------------------------------------------------------
# core search
# ---------------------------------------------------------------------------


def _ldl(g: Sequence[Sequence[Fraction]]) -> tuple[list[Fraction], list[list[Fraction]]]:
    """q(x) = sum_i d[i] * (x_i + sum_{j>i} mu[i][j] x_j)^2."""
    r = len(g)
    a = [[Fraction(x) for x in row] for row in g]
    d = []
    mu = [[Fraction(0)] * r for _ in range(r)]
    for i in range(r):
        di = a[i][i]
        if di <= 0:
            raise NotPositiveDefiniteError("form is not positive definite")
        d.append(di)
        for j in range(i + 1, r):
            mu[i][j] = a[i][j] / di
        for j in range(i + 1, r):
            for k in range(j, r):
                a[j][k] -= di * mu[i][j] * mu[i][k]
                a[k][j] = a[j][k]
    return d, mu


def fincke_pohst(
    g: Sequence[Sequence[Fraction]],
    lo: Fraction,
    hi: Fraction,
    center: Sequence[Fraction] | None = None,
) -> list[tuple[int, ...]]:
    """All z in Z^r with lo <= (z - c)^t g (z - c) <= hi, for g positive definite.

    The search runs on integers: at level i the scaled offset
    T_i = K_i z_i + S_i is an integer and the level contributes W_i T_i^2 to
    the scaled form value, so every pruning test is an integer comparison.
    """
    r = len(g)
    lo, hi = Fraction(lo), Fraction(hi)
    if hi < 0 or hi < lo:
        return []
    if r == 0:
        return [()] if lo <= 0 <= hi else []
    c = [Fraction(0)] * r if center is None else [Fraction(x) for x in center]
    d, mu = _ldl(g)
    C = lcm(*(x.denominator for x in c))
    cn = [int(x * C) for x in c]
    M = [lcm(*(mu[i][j].denominator for j in range(i + 1, r))) if i + 1 < r else 1 for i in range(r)]
    mn = [[int(mu[i][j] * M[i]) for j in range(r)] for i in range(r)]
    K = [M[i] * C for i in range(r)]
    L = lcm(*((d[i] / (K[i] * K[i])).denominator for i in range(r)), lo.denominator, hi.denominator)
    W = [int(d[i] * L / (K[i] * K[i])) for i in range(r)]
    H = int(hi * L)
    LO = int(lo * L) if lo > 0 else 0
    exact = lo == hi
    out: list[tuple[int, ...]] = []
    z = [0] * r
    y = [0] * r  # C z_j - cn_j

    def level(i: int, used: int):
        S = -M[i] * cn[i]
        row = mn[i]
        for j in range(i + 1, r):
            S += row[j] * y[j]
        B = H - used
        Ki, Wi = K[i], W[i]
        if exact and i == 0:
            q, rem = divmod(B, Wi)
            if rem:
                return
            T = isqrt(q)
            if T * T != q:
                return
            for t in sorted({-T, T}):
                zi, rem = divmod(t - S, Ki)
                if not rem:
                    z[0] = zi
                    out.append(tuple(z))
            return
        tmax = isqrt(B // Wi)
        zlo = -((tmax + S) // Ki)  # ceil((-tmax - S) / Ki)
        zhi = (tmax - S) // Ki
        for zi in range(zlo, zhi + 1):
            t = Ki * zi + S
            val = Wi * t * t
            if val > B:
                continue
            z[i] = zi
            if i == 0:
                if used + val >= LO:
                    out.append(tuple(z))
            else:
                y[i] = C * zi - cn[i]
                level(i - 1, used + val)

    level(r - 1, 0)
    return out


# ---------------------------------------------------------------------------
# Gaussian vectors
# ---------------------------------------------------------------------------


def _complex_rank(vectors: Sequence[Sequence]) -> int:
    rows = [[GaussianRational.coerce(x) for x in v] for v in vectors]
    if not rows:
        return 0
    n = len(rows[0])
    rank = 0
    for c in range(n):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = rows[rank][c].inverse()
        for i in range(len(rows)):
            if i != rank and rows[i][c]:
                f = rows[i][c] * inv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def _linear_rows(linear: Sequence[tuple[Sequence, object]], n: int):
    rows, rhs = [], []
    for w, c in linear:
        w = [GaussianRational.coerce(x) for x in w]
        c = GaussianRational.coerce(c)
        re_row, im_row = [], []
        for wk in w:
            al, be = wk.real, wk.imag
            re_row += [al, -be]
            im_row += [be, al]
        rows += [re_row, im_row]
        rhs += [c.real, c.imag]
    return rows, rhs


def enumerate_vectors(
    a: GaussMatrix,
    lo,
    hi,
    linear: Sequence[tuple[Sequence, object]] = (),
) -> list[Vector]:
    """All y in Z[i]^n with lo <= y^* a y <= hi and w . y == c for each (w, c).

    ``w . y`` is the plain (bilinear) pairing sum_k w_k y_k.  Results are
    re-verified exactly and returned in lexicographic order of the interleaved
    real coordinates.
    """
    n = a.n
    lo, hi = Fraction(lo), Fraction(hi)
    if hi < 0 or hi < lo:
        return []
    lo = max(lo, Fraction(0))
    R = realify(a)
    N = 2 * n
    if linear:
        rows, rhs = _linear_rows(linear, n)
        sol = integer_affine_solutions(rows, rhs, N)
        if sol is None:
            return []
        z0, kernel = sol
    else:
        z0, kernel = [0] * N, [[int(j == k) for j in range(N)] for k in range(N)]
    Rz0 = [sum(R[j][k] * z0[k] for k in range(N)) for j in range(N)]
    const = sum(z0[j] * Rz0[j] for j in range(N))
    r = len(kernel)
    if r == 0:
        pts = [()] if lo <= const <= hi else []
    else:
        RK = [[sum(R[j][k] * kv[k] for k in range(N)) for j in range(N)] for kv in kernel]
        G = [[sum(kernel[s][j] * RK[t][j] for j in range(N)) for t in range(r)] for s in range(r)]
        lin = [sum(kernel[s][j] * Rz0[j] for j in range(N)) for s in range(r)]
        if any(lin):
            center = solve_rational(G, [-x for x in lin])
        else:
            center = [Fraction(0)] * r
        cgc = sum(center[s] * G[s][t] * center[t] for s in range(r) for t in range(r))
        const = const - cgc
        pts = fincke_pohst(G, lo - const, hi - const, center)
    # exact re-check on scaled integers
    den = lcm(*(x.denominator for row in R for x in row))
    Ri = [[int(x * den) for x in row] for row in R]
    lo_s, hi_s = lo * den, hi * den
    if linear:
        rden = [lcm(*(x.denominator for x in row), b.denominator) for row, b in zip(rows, rhs)]
        lin_i = [([int(x * m) for x in row], int(b * m)) for row, b, m in zip(rows, rhs, rden)]
    else:
        lin_i = []
    out = []
    for t in pts:
        Y = [z0[j] + sum(t[s] * kernel[s][j] for s in range(r)) for j in range(N)]
        val = sum(Y[j] * sum(Ri[j][k] * Y[k] for k in range(N)) for j in range(N))
        if not lo_s <= val <= hi_s:
            raise ArithmeticError(f"enumeration produced {Y} with scaled form value {val}")
        for row, b in lin_i:
            if sum(x * v for x, v in zip(row, Y)) != b:
                raise ArithmeticError(f"enumeration produced {Y} violating a linear condition")
        out.append(tuple(Y))
    out.sort()
    return [from_real_coordinates(Y) for Y in out]


def _check_query(q: ShellQuery):
    if not q.a.is_positive_definite():
        raise NotPositiveDefiniteError("shell enumeration needs a positive definite form")
    if q.constraints and _complex_rank(q.constraints) < len(q.constraints):
        raise DependentConstraintsError("constraint vectors are linearly dependent")
    return [(_form_row(q.a, x), 0) for x in q.constraints]


def _form_row(a: GaussMatrix, x: Sequence) -> tuple[GaussianRational, ...]:
    # coefficients of y -> x^* a y
    n = a.n
    xs = [GaussianRational.coerce(v).conj() for v in x]
    return tuple(sum((xs[j] * a.rows[j][k] for j in range(n)), GaussianRational(0)) for k in range(n))


def enumerate_shell(q: ShellQuery) -> list[Vector]:
    """Exact shell y^* a y = target under the homogeneous constraints."""
    linear = _check_query(q)
    lo, hi = q.bounds
    if lo != hi:
        raise ValueError("enumerate_shell needs an exact target; use enumerate_interval")
    return enumerate_vectors(q.a, lo, hi, linear)


def enumerate_interval(q: ShellQuery) -> list[Vector]:
    """All y with t1 <= y^* a y <= t2 under the homogeneous constraints."""
    linear = _check_query(q)
    lo, hi = q.bounds
    if hi < lo:
        raise ValueError("empty target interval")
    return enumerate_vectors(q.a, lo, hi, linear)
