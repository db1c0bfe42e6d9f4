"""Exact arithmetic in Z[i] and Q(i).

Values are immutable.  ``GaussianInt`` holds an element of Z[i];
``GaussianRational`` holds an element of Q(i) as ``num/den`` with a positive
rational-integer denominator and a canonical (fully reduced over Z) form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Union


class GaussianArithmeticError(ArithmeticError):
    pass


@dataclass(frozen=True, slots=True)
class GaussianInt:
    re: int
    im: int = 0

    @classmethod
    def coerce(cls, z) -> "GaussianInt":
        if isinstance(z, GaussianInt):
            return z
        if isinstance(z, int):
            return cls(z, 0)
        if isinstance(z, GaussianRational):
            if z.den != 1:
                raise GaussianArithmeticError(f"{z} is not a Gaussian integer")
            return z.num
        if isinstance(z, Fraction) and z.denominator == 1:
            return cls(z.numerator, 0)
        if isinstance(z, complex) and z.real.is_integer() and z.imag.is_integer():
            return cls(int(z.real), int(z.imag))
        if isinstance(z, str):
            return parse_gaussian(z)
        raise TypeError(f"cannot interpret {z!r} as a Gaussian integer")

    # arithmetic --------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, int):
            return GaussianInt(self.re + other, self.im)
        if isinstance(other, GaussianInt):
            return GaussianInt(self.re + other.re, self.im + other.im)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return GaussianInt(-self.re, -self.im)

    def __sub__(self, other):
        if isinstance(other, int):
            return GaussianInt(self.re - other, self.im)
        if isinstance(other, GaussianInt):
            return GaussianInt(self.re - other.re, self.im - other.im)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, int):
            return GaussianInt(other - self.re, -self.im)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, int):
            return GaussianInt(self.re * other, self.im * other)
        if isinstance(other, GaussianInt):
            a, b, c, d = self.re, self.im, other.re, other.im
            return GaussianInt(a * c - b * d, a * d + b * c)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise GaussianArithmeticError("negative power of a Gaussian integer")
        result = GaussianInt(1, 0)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __truediv__(self, other):
        return GaussianRational.coerce(self) / other

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __bool__(self):
        return bool(self.re or self.im)

    def __eq__(self, other):
        if isinstance(other, GaussianInt):
            return self.re == other.re and self.im == other.im
        if isinstance(other, int):
            return self.im == 0 and self.re == other
        if isinstance(other, GaussianRational):
            return other.den == 1 and other.num == self
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im)) if self.im else hash(self.re)

    def __str__(self):
        return format_gaussian(self.re, self.im)

    def __repr__(self):
        return f"GaussianInt({self})"

    def __complex__(self):
        return complex(self.re, self.im)

    # ring structure ----------------------------------------------------
    def conj(self) -> "GaussianInt":
        return GaussianInt(self.re, -self.im)

    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def is_unit(self) -> bool:
        return self.norm() == 1

    def canonical(self) -> "GaussianInt":
        """The associate with re > 0 and im >= 0 (zero maps to zero)."""
        a, b = self.re, self.im
        if not (a or b):
            return self
        # multiplying by i sends (a, b) -> (-b, a)
        while not (a > 0 and b >= 0):
            a, b = -b, a
        return GaussianInt(a, b)

    def unit_to_canonical(self) -> "GaussianInt":
        """The unit u with u * self == self.canonical()."""
        u = GaussianInt(1, 0)
        a, b = self.re, self.im
        if not (a or b):
            raise GaussianArithmeticError("zero has no canonical unit")
        while not (a > 0 and b >= 0):
            a, b = -b, a
            u = u * I
        return u

    def divides(self, other) -> bool:
        other = GaussianInt.coerce(other)
        if not self:
            return not other
        n = self.norm()
        q = other * self.conj()
        return q.re % n == 0 and q.im % n == 0


I = GaussianInt(0, 1)
ONE = GaussianInt(1, 0)
ZERO = GaussianInt(0, 0)
UNITS = (GaussianInt(1, 0), GaussianInt(0, 1), GaussianInt(-1, 0), GaussianInt(0, -1))


def _round_div(a: int, n: int) -> int:
    # nearest integer to a/n for n > 0, ties toward +inf
    return (2 * a + n) // (2 * n)


def divmod_gaussian(a: GaussianInt, b: GaussianInt) -> tuple[GaussianInt, GaussianInt]:
    """Euclidean division a = q*b + r with N(r) <= N(b)/2."""
    if not b:
        raise ZeroDivisionError("Gaussian division by zero")
    n = b.norm()
    t = a * b.conj()
    q = GaussianInt(_round_div(t.re, n), _round_div(t.im, n))
    return q, a - q * b


def exact_div(a, b) -> GaussianInt:
    a = GaussianInt.coerce(a)
    b = GaussianInt.coerce(b)
    if not b:
        raise ZeroDivisionError("Gaussian division by zero")
    n = b.norm()
    t = a * b.conj()
    if t.re % n or t.im % n:
        raise GaussianArithmeticError(f"{b} does not divide {a}")
    return GaussianInt(t.re // n, t.im // n)


def gaussian_gcd(a, b) -> GaussianInt:
    """Canonical-associate gcd of two Gaussian integers, not both zero."""
    a = GaussianInt.coerce(a)
    b = GaussianInt.coerce(b)
    if not a and not b:
        raise GaussianArithmeticError("gcd(0, 0) is undefined")
    while b:
        _, r = divmod_gaussian(a, b)
        a, b = b, r
    return a.canonical()


def gaussian_xgcd(a: GaussianInt, b: GaussianInt) -> tuple[GaussianInt, GaussianInt, GaussianInt]:
    """Return (g, s, t) with s*a + t*b == g (g not normalized)."""
    s0, s1, t0, t1 = ONE, ZERO, ZERO, ONE
    while b:
        q, r = divmod_gaussian(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return a, s0, t0


# ---------------------------------------------------------------------------
# Q(i)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class GaussianRational:
    """Element ``num/den`` of Q(i), always stored in canonical form."""

    num: GaussianInt
    den: int = 1

    def __post_init__(self):
        d = self.den
        if not isinstance(self.num, GaussianInt):
            object.__setattr__(self, "num", GaussianInt.coerce(self.num))
        if d == 0:
            raise ZeroDivisionError("zero denominator")
        a, b = self.num.re, self.num.im
        if d < 0:
            a, b, d = -a, -b, -d
        g = gcd(gcd(a, b), d)
        if g != 1:
            a, b, d = a // g, b // g, d // g
        if d != self.den or a != self.num.re or b != self.num.im:
            object.__setattr__(self, "num", GaussianInt(a, b))
            object.__setattr__(self, "den", d)

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, GaussianInt):
            return cls(x, 1)
        if isinstance(x, int):
            return cls(GaussianInt(x, 0), 1)
        if isinstance(x, Fraction):
            return cls(GaussianInt(x.numerator, 0), x.denominator)
        if isinstance(x, str):
            return parse_gaussian_rational(x)
        raise TypeError(f"cannot interpret {x!r} as an element of Q(i)")

    @classmethod
    def from_fractions(cls, re_part: Fraction, im_part: Fraction = Fraction(0)) -> "GaussianRational":
        re_part, im_part = Fraction(re_part), Fraction(im_part)
        d = re_part.denominator * im_part.denominator // gcd(re_part.denominator, im_part.denominator)
        return cls(GaussianInt(re_part.numerator * (d // re_part.denominator),
                               im_part.numerator * (d // im_part.denominator)), d)

    @property
    def real(self) -> Fraction:
        return Fraction(self.num.re, self.den)

    @property
    def imag(self) -> Fraction:
        return Fraction(self.num.im, self.den)

    def conj(self) -> "GaussianRational":
        return GaussianRational(self.num.conj(), self.den)

    def norm(self) -> Fraction:
        """|x|^2 as an exact rational."""
        return Fraction(self.num.norm(), self.den * self.den)

    def is_integral(self) -> bool:
        return self.den == 1

    def is_real(self) -> bool:
        return self.num.im == 0

    def __bool__(self):
        return bool(self.num)

    def __add__(self, other):
        if isinstance(other, int):
            return GaussianRational(GaussianInt(self.num.re + other * self.den, self.num.im), self.den)
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        d1, d2 = self.den, o.den
        return GaussianRational(
            GaussianInt(self.num.re * d2 + o.num.re * d1, self.num.im * d2 + o.num.im * d1), d1 * d2
        )

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.num, self.den)

    def __sub__(self, other):
        try:
            return self + (-GaussianRational.coerce(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            return GaussianRational(self.num * other, self.den)
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def inverse(self) -> "GaussianRational":
        if not self.num:
            raise ZeroDivisionError("inverse of zero in Q(i)")
        # den/num = den * conj(num) / N(num)
        return GaussianRational(self.num.conj() * self.den, self.num.norm())

    def __truediv__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return GaussianRational(self.num ** e, self.den ** e)

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.den == other.den and self.num == other.num
        if isinstance(other, (int, GaussianInt)):
            return self.den == 1 and self.num == other
        if isinstance(other, Fraction):
            return self.num.im == 0 and Fraction(self.num.re, self.den) == other
        return NotImplemented

    def __hash__(self):
        if self.den == 1:
            return hash(self.num)
        if self.num.im == 0:
            return hash(Fraction(self.num.re, self.den))
        return hash((self.num.re, self.num.im, self.den))

    def __complex__(self):
        return complex(self.num.re / self.den, self.num.im / self.den)

    def __str__(self):
        if self.den == 1:
            return str(self.num)
        if self.num.im == 0:
            return f"{self.num.re}/{self.den}"
        return f"({self.num})/{self.den}"

    def __repr__(self):
        return f"GaussianRational({self})"


Scalar = Union[int, Fraction, GaussianInt, GaussianRational]

Q_ZERO = GaussianRational(ZERO, 1)
Q_ONE = GaussianRational(ONE, 1)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def format_gaussian(a: int, b: int) -> str:
    if b == 0:
        return str(a)
    if a == 0:
        return f"{b}i"
    sign = "+" if b > 0 else "-"
    return f"{a}{sign}{abs(b)}i"


_GAUSS_RE = re.compile(
    r"^\s*(?:(?P<re>[+-]?\d+)(?=[+-]|\s*$))?\s*(?:(?P<sign>[+-])?\s*(?P<im>\d+)?\s*i)?\s*$"
)


def parse_gaussian(s: str) -> GaussianInt:
    """Parse ``"a+bi"``, ``"a-bi"``, ``"bi"``, ``"i"``, ``"-i"`` or ``"a"``."""
    text = s.replace(" ", "")
    m = _GAUSS_RE.match(text)
    if not text or not m or (m.group("re") is None and "i" not in text):
        raise ValueError(f"malformed Gaussian integer {s!r}")
    re_part = int(m.group("re")) if m.group("re") is not None else 0
    im_part = 0
    if text.endswith("i"):
        im_part = int(m.group("im")) if m.group("im") is not None else 1
        if m.group("sign") == "-":
            im_part = -im_part
    return GaussianInt(re_part, im_part)


def parse_gaussian_rational(s: str) -> GaussianRational:
    """Parse ``"(a+bi)/d"``, ``"p/q"`` or a Gaussian integer literal."""
    text = s.strip()
    if "/" in text:
        num, den = text.rsplit("/", 1)
        num = num.strip()
        if num.startswith("(") and num.endswith(")"):
            num = num[1:-1]
        return GaussianRational(parse_gaussian(num), int(den))
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    return GaussianRational(parse_gaussian(text), 1)


# ---------------------------------------------------------------------------
# split primes, valuations, residues
# ---------------------------------------------------------------------------


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def _sqrt_minus_one_mod(p: int) -> int:
    for c in range(2, p):
        r = pow(c, (p - 1) // 4, p)
        if r * r % p == p - 1:
            return r
    raise GaussianArithmeticError(f"-1 is not a square modulo {p}")


@dataclass(frozen=True, slots=True)
class SplitPrime:
    """A Gaussian prime above a rational prime p = 1 mod 4, with re > im > 0."""

    pi: GaussianInt
    p: int

    def __post_init__(self):
        if self.pi.norm() != self.p or self.p % 4 != 1 or not is_prime(self.p):
            raise ValueError(f"{self.pi} is not a prime above a split rational prime")
        if not (self.pi.re > self.pi.im > 0):
            raise ValueError(f"{self.pi} is not normalized (need re > im > 0)")

    @classmethod
    def above(cls, p: int) -> "SplitPrime":
        if p % 4 != 1 or not is_prime(p):
            raise ValueError(f"{p} is not a rational prime congruent to 1 mod 4")
        r = _sqrt_minus_one_mod(p)
        g = gaussian_gcd(GaussianInt(p), GaussianInt(r, 1))
        a, b = g.re, g.im
        if a < b:
            a, b = b, a  # b + ai is an associate of the conjugate prime
        return cls(GaussianInt(a, b), p)

    @classmethod
    def from_gaussian(cls, z) -> "SplitPrime":
        z = GaussianInt.coerce(z)
        return cls(z, z.norm())

    def conj_prime(self) -> GaussianInt:
        return self.pi.conj()

    def __str__(self):
        return str(self.pi)


def split_primes_in_window(c1: int, c2: int) -> list[SplitPrime]:
    """One normalized prime above each p = 1 mod 4 with c1 <= p < c2, sorted by p."""
    if c1 < 2 or c2 < c1:
        raise ValueError("need 2 <= c1 <= c2")
    return [SplitPrime.above(p) for p in range(c1, c2) if p % 4 == 1 and is_prime(p)]


def _pi_of(pi) -> GaussianInt:
    return pi.pi if isinstance(pi, SplitPrime) else GaussianInt.coerce(pi)


def _valuation_int(z: GaussianInt, pi: GaussianInt) -> int:
    if not z:
        raise GaussianArithmeticError("valuation of zero")
    e = 0
    n = pi.norm()
    pc = pi.conj()
    while True:
        t = z * pc
        if t.re % n or t.im % n:
            return e
        z = GaussianInt(t.re // n, t.im // n)
        e += 1


def _rational_int_valuation(d: int, p: int) -> int:
    e = 0
    while d % p == 0:
        d //= p
        e += 1
    return e


def _flatten(x) -> Iterable:
    if isinstance(x, (int, Fraction, GaussianInt, GaussianRational)):
        yield x
        return
    rows = getattr(x, "rows", None)
    if rows is not None:
        x = rows
    for item in x:
        yield from _flatten(item)


def valuation(x, pi) -> int:
    """pi-adic valuation of a scalar, or the minimum over the nonzero entries of an aggregate."""
    pg = _pi_of(pi)
    p = pg.norm()
    best = None
    for e in _flatten(x):
        q = GaussianRational.coerce(e)
        if not q:
            continue
        v = _valuation_int(q.num, pg) - _rational_int_valuation(q.den, p)
        if best is None or v < best:
            best = v
    if best is None:
        raise GaussianArithmeticError("valuation of zero is not represented")
    return best


def pi_power_divides(z, pi, rho: int) -> bool:
    """True iff pi^rho divides the Gaussian integer z (zero is divisible by everything)."""
    z = GaussianInt.coerce(z)
    if not z:
        return True
    return _valuation_int(z, _pi_of(pi)) >= rho


@lru_cache(maxsize=None)
def _residue_of_i(pi_re: int, pi_im: int, rho: int) -> int:
    pi = GaussianInt(pi_re, pi_im)
    p = pi.norm()
    r = _sqrt_minus_one_mod(p)
    if not pi.divides(GaussianInt(r, -1)):
        r = p - r
    mod = p
    for _ in range(1, rho):
        mod *= p
        # Newton step for x^2 + 1 = 0
        r = (r - (r * r + 1) * pow(2 * r, -1, mod)) % mod
    if not pi_power_divides(GaussianInt(r, -1), pi, rho):
        raise GaussianArithmeticError("Hensel lift left the pi-branch")
    return r


def integer_residue(z, pi, rho: int) -> int:
    """The unique t in [0, p^rho) with pi^rho | (z - t)."""
    if rho < 1:
        raise ValueError("rho must be positive")
    z = GaussianInt.coerce(z)
    pg = _pi_of(pi)
    r = _residue_of_i(pg.re, pg.im, rho)
    return (z.re + z.im * r) % (pg.norm() ** rho)


def is_locally_integral(x, pi, pi2) -> bool:
    """True iff x lies in Z[i] localized at both pi and pi2."""
    q = GaussianRational.coerce(x)
    if not q:
        return True
    return valuation(q, pi) >= 0 and valuation(q, pi2) >= 0
