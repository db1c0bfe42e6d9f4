"""Exact matrices over Q(i).

Everything here is exact: entries are ``GaussianRational`` and the only
floats produced are for display (``Complexity.__float__``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from math import lcm
from typing import Sequence

from .gaussian import (
    ONE,
    ZERO,
    GaussianArithmeticError,
    GaussianInt,
    GaussianRational,
    Q_ONE,
    Q_ZERO,
    divmod_gaussian,
    exact_div,
    gaussian_gcd,
    valuation,
)


class SingularMatrixError(ArithmeticError):
    pass


class NotPositiveDefiniteError(ValueError):
    pass


def _q(x) -> GaussianRational:
    return GaussianRational.coerce(x)


@dataclass(frozen=True)
class GaussMatrix:
    """Square matrix with entries in Q(i), stored row-major."""

    rows: tuple[tuple[GaussianRational, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(_q(x) for x in row) for row in self.rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("matrix must be square")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def identity(cls, n: int):
        return cls(tuple(tuple(Q_ONE if j == k else Q_ZERO for k in range(n)) for j in range(n)))

    @classmethod
    def diag(cls, values: Sequence):
        n = len(values)
        return cls(tuple(tuple(_q(values[j]) if j == k else Q_ZERO for k in range(n)) for j in range(n)))

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence]):
        n = len(cols)
        return cls(tuple(tuple(cols[k][j] for k in range(n)) for j in range(n)))

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, jk):
        j, k = jk
        return self.rows[j][k]

    def column(self, k: int) -> tuple[GaussianRational, ...]:
        return tuple(row[k] for row in self.rows)

    def columns(self) -> list[tuple[GaussianRational, ...]]:
        return [self.column(k) for k in range(self.n)]

    def __matmul__(self, other: "GaussMatrix") -> "GaussMatrix":
        n = self.n
        cols = other.columns()
        return GaussMatrix(
            tuple(tuple(_dot(self.rows[j], cols[k]) for k in range(n)) for j in range(n))
        )

    def __add__(self, other: "GaussMatrix") -> "GaussMatrix":
        return GaussMatrix(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __sub__(self, other: "GaussMatrix") -> "GaussMatrix":
        return GaussMatrix(tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def scale(self, c) -> "GaussMatrix":
        c = _q(c)
        return GaussMatrix(tuple(tuple(c * a for a in r) for r in self.rows))

    def adjoint(self) -> "GaussMatrix":
        n = self.n
        return GaussMatrix(tuple(tuple(self.rows[k][j].conj() for k in range(n)) for j in range(n)))

    def apply(self, v: Sequence) -> tuple[GaussianRational, ...]:
        return tuple(_dot(row, v) for row in self.rows)

    def is_integral(self) -> bool:
        return all(x.den == 1 for r in self.rows for x in r)

    def is_diagonal(self) -> bool:
        return all(not self.rows[j][k] for j in range(self.n) for k in range(self.n) if j != k)

    def integer_rows(self) -> list[list[GaussianInt]]:
        if not self.is_integral():
            raise GaussianArithmeticError("matrix has non-integral entries")
        return [[x.num for x in r] for r in self.rows]

    def det(self) -> GaussianRational:
        return determinant(self.rows)

    def inverse(self) -> "GaussMatrix":
        return GaussMatrix(_inverse(self.rows))

    def to_json(self) -> list[list[str]]:
        return [[str(x) for x in r] for r in self.rows]

    @classmethod
    def from_json(cls, data):
        return cls(tuple(tuple(_q(x) for x in r) for r in data))

    def __str__(self):
        return "[" + ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self.rows) + "]"

    def __eq__(self, other):
        # entries decide equality; a SelfAdjointMatrix equals the plain matrix with the same rows
        if not isinstance(other, GaussMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)


class SelfAdjointMatrix(GaussMatrix):
    """Self-adjoint (Hermitian) matrix over Q(i)."""

    def __post_init__(self):
        super().__post_init__()
        n = self.n
        for j in range(n):
            if self.rows[j][j].num.im:
                raise ValueError("diagonal entries of a self-adjoint matrix must be real")
            for k in range(j + 1, n):
                if self.rows[j][k] != self.rows[k][j].conj():
                    raise ValueError("matrix is not self-adjoint")

    @classmethod
    def from_matrix(cls, m: GaussMatrix) -> "SelfAdjointMatrix":
        return cls(m.rows)

    def leading_minors(self) -> list[Fraction]:
        out = []
        for k in range(1, self.n + 1):
            d = determinant([r[:k] for r in self.rows[:k]])
            out.append(d.real)
        return out

    def is_positive_definite(self) -> bool:
        return all(m > 0 for m in self.leading_minors())

    def diagonal(self) -> tuple[Fraction, ...]:
        return tuple(self.rows[j][j].real for j in range(self.n))

    def trace(self) -> Fraction:
        return sum(self.diagonal(), Fraction(0))

    def form(self, x: Sequence, y: Sequence | None = None) -> GaussianRational:
        """x^* A y (y defaults to x)."""
        return hermitian_form(self, x, x if y is None else y)


def _dot(row: Sequence, vec: Sequence) -> GaussianRational:
    acc = Q_ZERO
    for a, b in zip(row, vec):
        if a and b:
            acc = acc + a * b
    return acc


def hermitian_form(a: GaussMatrix, x: Sequence, y: Sequence) -> GaussianRational:
    """x^* A y for column vectors x, y."""
    acc = Q_ZERO
    for j, xj in enumerate(x):
        xj = _q(xj)
        if not xj:
            continue
        row = _dot(a.rows[j], y)
        if row:
            acc = acc + xj.conj() * row
    return acc


def determinant(rows: Sequence[Sequence]) -> GaussianRational:
    m = [[_q(x) for x in r] for r in rows]
    n = len(m)
    det = Q_ONE
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c]), None)
        if piv is None:
            return Q_ZERO
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det = det * m[c][c]
        inv = m[c][c].inverse()
        for r in range(c + 1, n):
            if m[r][c]:
                f = m[r][c] * inv
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return det


def _inverse(rows) -> tuple[tuple[GaussianRational, ...], ...]:
    n = len(rows)
    m = [[_q(x) for x in r] + [Q_ONE if j == k else Q_ZERO for k in range(n)] for j, r in enumerate(rows)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c]), None)
        if piv is None:
            raise SingularMatrixError("matrix is singular")
        m[c], m[piv] = m[piv], m[c]
        inv = m[c][c].inverse()
        m[c] = [inv * a for a in m[c]]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return tuple(tuple(r[n:]) for r in m)


# ---------------------------------------------------------------------------
# realification
# ---------------------------------------------------------------------------


def realify(a: GaussMatrix) -> tuple[tuple[Fraction, ...], ...]:
    """The 2n x 2n real symmetric matrix R with y^* a y = Y^t R Y.

    Y interleaves coordinates: (Re y_1, Im y_1, Re y_2, Im y_2, ...).
    """
    n = a.n
    out = [[Fraction(0)] * (2 * n) for _ in range(2 * n)]
    for j in range(n):
        for k in range(n):
            z = a.rows[j][k]
            al, be = z.real, z.imag
            out[2 * j][2 * k] = al
            out[2 * j][2 * k + 1] = -be
            out[2 * j + 1][2 * k] = be
            out[2 * j + 1][2 * k + 1] = al
    return tuple(tuple(r) for r in out)


def real_coordinates(y: Sequence) -> tuple[Fraction, ...]:
    out = []
    for z in y:
        z = _q(z)
        out.extend((z.real, z.imag))
    return tuple(out)


def from_real_coordinates(v: Sequence[int]) -> tuple[GaussianInt, ...]:
    return tuple(GaussianInt(int(v[2 * j]), int(v[2 * j + 1])) for j in range(len(v) // 2))


# ---------------------------------------------------------------------------
# Smith normal form over Z[i]
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmithForm:
    U: GaussMatrix
    d: tuple[GaussianInt, ...]
    V: GaussMatrix

    def elementary_divisors(self) -> tuple[GaussianInt, ...]:
        return self.d


def smith_normal_form(g: GaussMatrix) -> SmithForm:
    """U g V = diag(d) with U, V invertible over Z[i] and d_1 | d_2 | ... canonical."""
    a = [row[:] for row in g.integer_rows()]
    n = len(a)
    U = [[ONE if j == k else ZERO for k in range(n)] for j in range(n)]
    V = [[ONE if j == k else ZERO for k in range(n)] for j in range(n)]

    def swap_rows(r, s):
        a[r], a[s] = a[s], a[r]
        U[r], U[s] = U[s], U[r]

    def swap_cols(c, e):
        for row in a:
            row[c], row[e] = row[e], row[c]
        for row in V:
            row[c], row[e] = row[e], row[c]

    def add_row(dst, src, q):  # row_dst -= q * row_src
        a[dst] = [x - q * y for x, y in zip(a[dst], a[src])]
        U[dst] = [x - q * y for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, q):  # col_dst -= q * col_src
        for row in a:
            row[dst] = row[dst] - q * row[src]
        for row in V:
            row[dst] = row[dst] - q * row[src]

    for t in range(n):
        while True:
            best = None
            for r in range(t, n):
                for c in range(t, n):
                    if a[r][c] and (best is None or a[r][c].norm() < best[0]):
                        best = (a[r][c].norm(), r, c)
            if best is None:
                raise SingularMatrixError("Smith normal form requires a nonsingular matrix")
            _, r, c = best
            if r != t:
                swap_rows(r, t)
            if c != t:
                swap_cols(c, t)
            piv = a[t][t]
            dirty = False
            for r in range(t + 1, n):
                if a[r][t]:
                    q, _ = divmod_gaussian(a[r][t], piv)
                    add_row(r, t, q)
                    dirty = dirty or bool(a[r][t])
            for c in range(t + 1, n):
                if a[t][c]:
                    q, _ = divmod_gaussian(a[t][c], piv)
                    add_col(c, t, q)
                    dirty = dirty or bool(a[t][c])
            if dirty:
                continue
            bad = next(
                (r for r in range(t + 1, n) for c in range(t + 1, n) if not piv.divides(a[r][c])), None
            )
            if bad is not None:
                a[t] = [x + y for x, y in zip(a[t], a[bad])]
                U[t] = [x + y for x, y in zip(U[t], U[bad])]
                continue
            break
        u = a[t][t].unit_to_canonical()
        if u != ONE:
            a[t] = [u * x for x in a[t]]
            U[t] = [u * x for x in U[t]]
    d = tuple(a[j][j] for j in range(n))
    return SmithForm(GaussMatrix(tuple(map(tuple, U))), d, GaussMatrix(tuple(map(tuple, V))))


def elementary_divisors(g: GaussMatrix) -> tuple[GaussianInt, ...]:
    return smith_normal_form(g).d


# ---------------------------------------------------------------------------
# Gram-Schmidt diagonalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EliminationStep:
    position: tuple[int, int]
    multiplier: GaussianRational
    pivot_before: Fraction
    pivot_after: Fraction


@dataclass(frozen=True)
class GramSchmidtResult:
    U: GaussMatrix
    q3: SelfAdjointMatrix
    steps: tuple[EliminationStep, ...]


def gram_schmidt_diagonalize(q2: SelfAdjointMatrix) -> GramSchmidtResult:
    """Diagonalize a positive definite form by unipotent column operations.

    Eliminates positions (1,2), (1,3), ..., (1,n), (2,3), ..., (n-1,n) in that
    order; each step is ``id + u E_{jk}`` with ``u = -q_jk / q_jj``.  Returns U
    with ``q3 = U^* q2 U`` diagonal.
    """
    n = q2.n
    q = [list(r) for r in q2.rows]
    U = [[Q_ONE if j == k else Q_ZERO for k in range(n)] for j in range(n)]
    steps = []
    for j in range(n):
        a = q[j][j]
        if a.real <= 0:
            raise NotPositiveDefiniteError(f"nonpositive pivot {a} at position {j + 1}")
        for k in range(j + 1, n):
            b = q[j][k]
            c = q[k][k].real
            u = -b / a
            if u:
                # column k += u * column j, then row k += conj(u) * row j
                for r in range(n):
                    q[r][k] = q[r][k] + u * q[r][j]
                    U[r][k] = U[r][k] + u * U[r][j]
                uc = u.conj()
                for s in range(n):
                    q[k][s] = q[k][s] + uc * q[j][s]
            after = q[k][k].real
            steps.append(EliminationStep((j + 1, k + 1), u, c, after))
    q3 = SelfAdjointMatrix(tuple(tuple(r) for r in q))
    if not q3.is_diagonal():
        raise GaussianArithmeticError("Gram-Schmidt left off-diagonal entries")
    if any(d <= 0 for d in q3.diagonal()):
        raise NotPositiveDefiniteError("form is not positive definite")
    return GramSchmidtResult(GaussMatrix(tuple(tuple(r) for r in U)), q3, tuple(steps))


# ---------------------------------------------------------------------------
# denominators and complexity
# ---------------------------------------------------------------------------


def denominator_lcm(x) -> int:
    """lcm of the canonical denominators of all entries."""
    rows = x.rows if isinstance(x, GaussMatrix) else x
    out = 1
    for r in rows:
        for e in (r if isinstance(r, (tuple, list)) else (r,)):
            out = lcm(out, _q(e).den)
    return out


def _cmp_sqrt_sum(a: int, b: int, c: int, d: int) -> int:
    """Sign of (sqrt a + sqrt b) - (sqrt c + sqrt d) for nonnegative integers."""
    # compare squares: a + b + 2 sqrt(ab)  vs  c + d + 2 sqrt(cd)
    lhs_r, lhs_s = a + b, 4 * a * b  # rational part, square of irrational part
    rhs_r, rhs_s = c + d, 4 * c * d
    # sign of (lhs_r - rhs_r) + sqrt(lhs_s) - sqrt(rhs_s)
    return _sign_r_plus_sqrt_diff(lhs_r - rhs_r, lhs_s, rhs_s)


def _sign_r_plus_sqrt_diff(r: int, s: int, t: int) -> int:
    """Sign of r + sqrt(s) - sqrt(t) with s, t >= 0."""
    # sign of sqrt(s) - sqrt(t)
    st = (s > t) - (s < t)
    if r == 0:
        return st
    if (r > 0 and st >= 0) or (r < 0 and st <= 0):
        return 1 if r > 0 else -1
    # opposite signs: compare |r| with |sqrt(s) - sqrt(t)|, i.e. r^2 vs s + t - 2 sqrt(st)
    # r^2 - s - t + 2 sqrt(st)  has the sign of  |r| - |sqrt s - sqrt t|
    w = r * r - s - t
    prod = s * t
    if w >= 0:
        mag = 1 if (w > 0 or prod > 0) else 0
    else:
        lhs, rhs = 4 * prod, w * w
        mag = (lhs > rhs) - (lhs < rhs)
    return mag if r > 0 else -mag


@total_ordering
@dataclass(frozen=True)
class Complexity:
    """The value sqrt(num_norm) + sqrt(den_norm) + 1, kept exact."""

    num_norm: int
    den_norm: int

    def __float__(self):
        return self.num_norm ** 0.5 + self.den_norm ** 0.5 + 1.0

    def __lt__(self, other: "Complexity"):
        return _cmp_sqrt_sum(self.num_norm, self.den_norm, other.num_norm, other.den_norm) < 0

    def __eq__(self, other):
        if not isinstance(other, Complexity):
            return NotImplemented
        return _cmp_sqrt_sum(self.num_norm, self.den_norm, other.num_norm, other.den_norm) == 0

    def __hash__(self):
        return hash(float(self))


def reduced_fraction(a) -> tuple[GaussianInt, GaussianInt]:
    """a = b0 / c0 with b0, c0 coprime in Z[i] and c0 canonical."""
    q = _q(a)
    if not q:
        return ZERO, ONE
    den = GaussianInt(q.den, 0)
    g = gaussian_gcd(q.num, den)
    b0, c0 = exact_div(q.num, g), exact_div(den, g)
    u = c0.unit_to_canonical()
    return b0 * u, c0 * u


def complexity(a) -> Complexity:
    b0, c0 = reduced_fraction(a)
    return Complexity(b0.norm(), c0.norm())


def matrix_complexity(m: GaussMatrix) -> Complexity:
    return max(complexity(x) for r in m.rows for x in r)


# ---------------------------------------------------------------------------
# rational and integral linear systems
# ---------------------------------------------------------------------------


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of {v in Q^ncols : rows v = 0} from the reduced row echelon form."""
    m = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -m[i][fc]
        basis.append(v)
    return basis


def rank(rows: Sequence[Sequence[Fraction]], ncols: int) -> int:
    return ncols - len(nullspace(rows, ncols))


def solve_rational(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    """Solve a square nonsingular rational system."""
    n = len(a)
    m = [[Fraction(x) for x in r] + [Fraction(y)] for r, y in zip(a, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c]), None)
        if piv is None:
            raise SingularMatrixError("singular rational system")
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [x * inv for x in m[c]]
        for i in range(n):
            if i != c and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return [m[i][n] for i in range(n)]


def integer_affine_solutions(
    rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction], ncols: int
) -> tuple[list[int], list[list[int]]] | None:
    """Parametrize the integer solutions of rows . z = rhs.

    Returns (z0, kernel) with every integer solution equal to z0 plus a unique
    integer combination of the kernel vectors, or None when there is no integer
    solution.  Works by column-style Hermite reduction C V = H with V unimodular.
    """
    c = []
    b = []
    for r, y in zip(rows, rhs):
        r = [Fraction(x) for x in r]
        y = Fraction(y)
        d = lcm(*(x.denominator for x in r), y.denominator)
        c.append([int(x * d) for x in r])
        b.append(int(y * d))
    V = [[int(j == k) for k in range(ncols)] for j in range(ncols)]  # columns transform

    def col_op(dst, src, q):  # col_dst -= q col_src
        for row in c:
            row[dst] -= q * row[src]
        for row in V:
            row[dst] -= q * row[src]

    def col_swap(x, y):
        for row in c:
            row[x], row[y] = row[y], row[x]
        for row in V:
            row[x], row[y] = row[y], row[x]

    pivot_rows = []
    p = 0
    for i in range(len(c)):
        if p == ncols:
            break
        row = c[i]
        while True:
            nz = [k for k in range(p, ncols) if row[k]]
            if not nz:
                break
            k = min(nz, key=lambda t: abs(row[t]))
            if k != p:
                col_swap(k, p)
            done = True
            for t in range(p + 1, ncols):
                if row[t]:
                    col_op(t, p, row[t] // row[p])
                    if row[t]:
                        done = False
            if done:
                break
        if row[p]:
            pivot_rows.append((i, p))
            p += 1
    w = [0] * ncols
    for i, col in pivot_rows:
        acc = b[i] - sum(c[i][k] * w[k] for k in range(col))
        if acc % c[i][col]:
            return None
        w[col] = acc // c[i][col]
    for i in range(len(c)):
        if sum(c[i][k] * w[k] for k in range(ncols)) != b[i]:
            return None
    z0 = [sum(V[j][k] * w[k] for k in range(ncols)) for j in range(ncols)]
    kernel = [[V[j][k] for j in range(ncols)] for k in range(p, ncols)]
    return z0, kernel


def is_unimodular_gaussian(m: GaussMatrix) -> bool:
    return m.is_integral() and m.det().num.is_unit() and m.det().den == 1


def local_profile(g: GaussMatrix, pi) -> tuple[int, ...]:
    """pi-valuations of the elementary divisors of an integral matrix."""
    return tuple(valuation(d, pi) for d in smith_normal_form(g).d)
