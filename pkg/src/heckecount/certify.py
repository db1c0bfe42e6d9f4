"""Certified sign decisions at real n-th roots of integers.

The finite-tolerance form condition compares quantities involving
s = N^(1/n) for a positive integer N.  Every comparison reduces to the sign
of a rational polynomial of degree <= 2 at s.  Signs are decided by rational
interval enclosures of s that are refined until the enclosure of f(s) excludes
zero; the boundary case f(s) = 0 is decided algebraically first so that the
refinement always terminates.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Sequence


def integer_root(N: int, n: int) -> int:
    """floor(N^(1/n)) for N >= 0."""
    if N < 0:
        raise ValueError("negative radicand")
    if N < 2:
        return N
    x = 1 << ((N.bit_length() + n - 1) // n)
    while True:
        y = ((n - 1) * x + N // x ** (n - 1)) // n
        if y >= x:
            break
        x = y
    while x ** n > N:
        x -= 1
    while (x + 1) ** n <= N:
        x += 1
    return x


def exact_root(N: int, n: int) -> int | None:
    r = integer_root(N, n)
    return r if r ** n == N else None


def rational_root(value: Fraction, n: int) -> Fraction | None:
    """value^(1/n) if it is rational (value >= 0)."""
    a = exact_root(value.numerator, n)
    b = exact_root(value.denominator, n)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def root_enclosure(N: int, n: int, bits: int) -> tuple[Fraction, Fraction]:
    """lo <= N^(1/n) <= hi with hi - lo <= 2^-bits."""
    scale = 1 << bits
    k = integer_root(N * scale ** n, n)
    lo = Fraction(k, scale)
    hi = lo if k ** n == N * scale ** n else Fraction(k + 1, scale)
    return lo, hi


def _is_rational_square(x: Fraction) -> bool:
    return x >= 0 and isqrt(x.numerator) ** 2 == x.numerator and isqrt(x.denominator) ** 2 == x.denominator


def _pow_quadratic(u: Fraction, v: Fraction, d: Fraction, n: int) -> tuple[Fraction, Fraction]:
    """(u + v sqrt d)^n as (U, V) meaning U + V sqrt d."""
    U, V = Fraction(1), Fraction(0)
    for _ in range(n):
        U, V = U * u + V * v * d, U * v + V * u
    return U, V


def _sign_quadratic_value(u: Fraction, v: Fraction, d: Fraction) -> int:
    """Sign of u + v sqrt(d), d > 0."""
    su = (u > 0) - (u < 0)
    sv = (v > 0) - (v < 0)
    if su == 0 or sv == 0 or su == sv:
        return su or sv
    # opposite signs: compare u^2 with v^2 d
    c = u * u - v * v * d
    return su if c > 0 else (-su if c < 0 else 0)


def vanishes_at_root(coeffs: Sequence[Fraction], N: int, n: int) -> bool:
    """Whether c0 + c1 s + c2 s^2 = 0 for s = N^(1/n) (real, positive)."""
    c0, c1, c2 = (Fraction(c) for c in (list(coeffs) + [0, 0, 0])[:3])
    r = exact_root(N, n)
    if r is not None:
        return c0 + c1 * r + c2 * r * r == 0
    if c1 == 0 and c2 == 0:
        return c0 == 0
    if c2 == 0:
        return False  # s would be rational
    if c1 == 0:
        t = -c0 / c2
        return t > 0 and t ** n == Fraction(N) ** 2
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0 or _is_rational_square(disc):
        return False  # roots complex or rational
    u = -c1 / (2 * c2)
    for v in (1 / (2 * c2), -1 / (2 * c2)):
        if _sign_quadratic_value(u, v, disc) <= 0:
            continue
        U, V = _pow_quadratic(u, v, disc, n)
        if V == 0 and U == N:
            return True
    return False


def _poly_interval(coeffs: Sequence[Fraction], lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    # enclosure of c0 + c1 s + c2 s^2 for s in [lo, hi] with 0 <= lo
    c0, c1, c2 = coeffs
    terms_lo = c0
    terms_hi = c0
    for c, a, b in ((c1, lo, hi), (c2, lo * lo, hi * hi)):
        if c >= 0:
            terms_lo += c * a
            terms_hi += c * b
        else:
            terms_lo += c * b
            terms_hi += c * a
    return terms_lo, terms_hi


def sign_at_root(coeffs: Sequence[Fraction], N: int, n: int, max_bits: int = 1 << 16) -> int:
    """Sign of c0 + c1 s + c2 s^2 at s = N^(1/n), decided exactly."""
    c = [Fraction(x) for x in (list(coeffs) + [0, 0, 0])[:3]]
    r = exact_root(N, n)
    if r is not None:
        v = c[0] + c[1] * r + c[2] * r * r
        return (v > 0) - (v < 0)
    if vanishes_at_root(c, N, n):
        return 0
    bits = 32
    while bits <= max_bits:
        lo, hi = root_enclosure(N, n, bits)
        flo, fhi = _poly_interval(c, lo, hi)
        if flo > 0:
            return 1
        if fhi < 0:
            return -1
        bits *= 2
    raise ArithmeticError("sign refinement did not terminate")  # unreachable for nonzero values
