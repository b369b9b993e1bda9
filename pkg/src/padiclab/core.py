"""Exact valued arithmetic over Q with the p-adic and archimedean absolute
values, sup-norms, and the two-place content function.

Scalars come in two flavours.  Exact scalars are plain rationals.  Truncated
scalars carry a rational approximant together with an absolute precision N,
meaning the true value agrees with the approximant modulo p^N; they model
generic points of Z_p that have no finite description.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import InvalidInput, PrecisionExhausted, ZeroVectorError

INF = math.inf

Rational = Union[int, Fraction]


class Prime(int):
    """An int that is known to be prime."""

    def __new__(cls, p):
        p = int(p)
        if p < 2 or any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
            raise InvalidInput(f"{p} is not prime")
        return super().__new__(cls, p)


def _vp_int(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation(x, p: int):
    """p-adic valuation of an exact rational (or scalar); INF for zero."""
    if isinstance(x, PAdicScalar):
        return x.valuation()
    x = Fraction(x)
    if x == 0:
        return INF
    return _vp_int(x.numerator, p) - _vp_int(x.denominator, p)


def padic_abs(x, p: int) -> Fraction:
    v = valuation(x, p)
    if v == INF:
        return Fraction(0)
    return Fraction(p) ** (-v)


def norm_p(v: Sequence, p: int) -> Fraction:
    if len(v) == 0:
        raise InvalidInput("norm of an empty vector")
    return max(padic_abs(c, p) for c in v)


def norm_inf(v: Sequence[Rational]) -> Fraction:
    if len(v) == 0:
        raise InvalidInput("norm of an empty vector")
    return max(abs(Fraction(c)) for c in v)


@dataclass(frozen=True)
class PAdicScalar:
    """Element of Q_p.  `precision` is None for exact values; otherwise the
    true value is congruent to `value` modulo p**precision."""

    p: int
    value: Fraction
    precision: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))
        if self.precision is not None:
            if self.precision < 1 and self.value == 0:
                raise InvalidInput("truncated scalar needs precision >= 1")

    @classmethod
    def exact(cls, x, p: int) -> "PAdicScalar":
        return cls(int(p), Fraction(x))

    @classmethod
    def truncated(cls, residue: int, precision: int, p: int) -> "PAdicScalar":
        if precision < 1:
            raise InvalidInput("precision must be >= 1")
        return cls(int(p), Fraction(int(residue) % p**precision), int(precision))

    @property
    def is_exact(self) -> bool:
        return self.precision is None

    @property
    def residue(self) -> int:
        """Residue mod p**precision (truncated scalars in Z_p only)."""
        if self.is_exact:
            raise InvalidInput("exact scalar has no residue")
        return self.residue_mod(self.precision)

    def valuation(self):
        v = valuation(self.value, self.p)
        if self.is_exact:
            return v
        if v >= self.precision:
            raise PrecisionExhausted(
                f"value vanishes modulo {self.p}^{self.precision}; zero cannot be certified"
            )
        return v

    def valuation_lower_bound(self):
        """A certified lower bound for the valuation (never raises)."""
        v = valuation(self.value, self.p)
        return v if self.is_exact else min(v, self.precision)

    def abs(self) -> Fraction:
        return padic_abs(self, self.p)

    def residue_mod(self, k: int) -> int:
        """The value reduced mod p**k as an int in [0, p**k).  Needs the value
        to be p-integral and k within the known precision."""
        if not self.is_exact and k > self.precision:
            raise PrecisionExhausted(f"residue mod {self.p}^{k} needs precision {k}")
        x = self.value
        if x.denominator % self.p == 0:
            raise InvalidInput("scalar is not p-integral")
        m = self.p**k
        return x.numerator * pow(x.denominator, -1, m) % m

    def shift(self, m: int) -> "PAdicScalar":
        """Multiply by p**m."""
        f = Fraction(self.p) ** m
        prec = None if self.is_exact else self.precision + m
        return PAdicScalar(self.p, self.value * f, prec)

    def _coerce(self, other) -> "PAdicScalar":
        if isinstance(other, PAdicScalar):
            if other.p != self.p:
                raise InvalidInput("mixing different primes")
            return other
        return PAdicScalar(self.p, Fraction(other))

    def __add__(self, other):
        o = self._coerce(other)
        return PAdicScalar(self.p, self.value + o.value, _min_prec(self.precision, o.precision))

    __radd__ = __add__

    def __neg__(self):
        return PAdicScalar(self.p, -self.value, self.precision)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        prec = None
        if self.precision is not None:
            prec = self.precision + o.valuation_lower_bound()
        if o.precision is not None:
            q = o.precision + self.valuation_lower_bound()
            prec = q if prec is None else min(prec, q)
        if prec == INF:
            # exact zero times a truncated value
            return PAdicScalar(self.p, Fraction(0))
        return PAdicScalar(self.p, self.value * o.value, prec)

    __rmul__ = __mul__

    def __str__(self):
        return format_scalar(self)


def _min_prec(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def as_scalar(x, p: int) -> PAdicScalar:
    if isinstance(x, PAdicScalar):
        return x
    return PAdicScalar.exact(x, p)


# -- exact magnitudes c * p**e -------------------------------------------------


@functools.total_ordering
@dataclass(frozen=True)
class ExactMag:
    """Exact nonnegative number coef * p**exp with rational coef and exp.

    Normalised so that coef is a p-adic unit (or zero), which makes equality
    structural.  Needed because contents pick up factors p**(-t/(n+1)).
    """

    p: int
    coef: Fraction
    exp: Fraction = Fraction(0)

    def __post_init__(self):
        c = Fraction(self.coef)
        e = Fraction(self.exp)
        if c < 0:
            raise InvalidInput("magnitudes are nonnegative")
        if c == 0:
            e = Fraction(0)
        else:
            v = valuation(c, self.p)
            c /= Fraction(self.p) ** v
            e += v
        object.__setattr__(self, "coef", c)
        object.__setattr__(self, "exp", e)

    @classmethod
    def power(cls, p: int, e) -> "ExactMag":
        return cls(p, Fraction(1), Fraction(e))

    def is_zero(self) -> bool:
        return self.coef == 0

    def __mul__(self, other):
        if isinstance(other, ExactMag):
            return ExactMag(self.p, self.coef * other.coef, self.exp + other.exp)
        return ExactMag(self.p, self.coef * Fraction(other), self.exp)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ExactMag):
            return ExactMag(self.p, self.coef / other.coef, self.exp - other.exp)
        return ExactMag(self.p, self.coef / Fraction(other), self.exp)

    def _as_mag(self, other) -> "ExactMag":
        return other if isinstance(other, ExactMag) else ExactMag(self.p, Fraction(other))

    def __eq__(self, other):
        if not isinstance(other, (ExactMag, int, Fraction)):
            return NotImplemented
        o = self._as_mag(other)
        return self.coef == o.coef and self.exp == o.exp

    def __hash__(self):
        return hash((self.coef, self.exp))

    def __lt__(self, other):
        o = self._as_mag(other)
        if self.coef == 0 or o.coef == 0:
            return self.coef == 0 and o.coef != 0
        # coef1 * p**e1 < coef2 * p**e2  <=>  (coef1/coef2)**den < p**num
        r = self.coef / o.coef
        d = o.exp - self.exp
        num, den = d.numerator, d.denominator
        lhs = r**den
        rhs = Fraction(self.p) ** num
        return lhs < rhs

    def is_rational(self) -> bool:
        return self.exp.denominator == 1

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise InvalidInput(f"{self} is irrational")
        return self.coef * Fraction(self.p) ** int(self.exp)

    def log_p(self) -> float:
        if self.coef == 0:
            return -INF
        return math.log(self.coef.numerator, self.p) - math.log(self.coef.denominator, self.p) + float(self.exp)

    def __float__(self):
        return float(self.p ** float(self.exp)) * float(self.coef)

    def __str__(self):
        return format_mag(self)

    __repr__ = __str__


def format_exp(e: Fraction) -> str:
    e = Fraction(e)
    return str(e.numerator) if e.denominator == 1 else f"({e.numerator}/{e.denominator})"


def format_mag(m: ExactMag) -> str:
    """'p^e' for pure powers, 'c*p^e' otherwise, '0' for zero."""
    if m.coef == 0:
        return "0"
    power = f"{m.p}^{format_exp(m.exp)}"
    if m.coef == 1:
        return power
    return f"{m.coef}*{power}" if m.exp != 0 else str(m.coef)


def to_mag(x, p: int) -> ExactMag:
    return x if isinstance(x, ExactMag) else ExactMag(p, Fraction(x))


# -- two-place vectors ---------------------------------------------------------


@dataclass(frozen=True)
class PlaceVector:
    """Element of (Q_p x R)^m.  The real coordinates are
    p**inf_scale * inf_part[i]; keeping the scale apart keeps them exact."""

    p: int
    p_part: tuple
    inf_part: tuple
    inf_scale: Fraction = Fraction(0)

    def __post_init__(self):
        if len(self.p_part) != len(self.inf_part):
            raise InvalidInput("p-adic and real parts differ in length")
        object.__setattr__(self, "p_part", tuple(as_scalar(c, self.p) for c in self.p_part))
        object.__setattr__(self, "inf_part", tuple(Fraction(c) for c in self.inf_part))
        object.__setattr__(self, "inf_scale", Fraction(self.inf_scale))

    @classmethod
    def diagonal(cls, q: Sequence[Rational], p: int) -> "PlaceVector":
        return cls(p, tuple(q), tuple(q))

    def __len__(self):
        return len(self.p_part)


def content(x: PlaceVector) -> ExactMag:
    """norm_p of the p-adic part times sup-norm of the real part."""
    np_ = norm_p(x.p_part, x.p)
    ni = norm_inf(x.inf_part)
    return ExactMag(x.p, np_ * ni, x.inf_scale)


def as_pinv_vector(coords: Iterable, p: int) -> tuple[Fraction, ...]:
    """Validate coordinates as an element of Z[1/p]^m."""
    out = []
    for c in coords:
        f = Fraction(c)
        d = f.denominator
        while d % p == 0:
            d //= p
        if d != 1:
            raise InvalidInput(f"{f} is not in Z[1/{p}]")
        out.append(f)
    return tuple(out)


def normalize_p_primitive(q: Sequence, p: int) -> tuple[int, ...]:
    """Scale a nonzero Z[1/p]-vector by the power of p that makes it integral
    with at least one coordinate prime to p."""
    q = as_pinv_vector(q, p)
    if not any(q):
        raise ZeroVectorError("cannot normalize the zero vector")
    m = min(valuation(c, p) for c in q if c)
    scale = Fraction(p) ** (-m)
    return tuple(int(c * scale) for c in q)


def sample_padic(p: int, N: int, seed) -> PAdicScalar:
    """Haar-random element of Z_p truncated to N digits."""
    if N < 1:
        raise InvalidInput("N must be >= 1")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return PAdicScalar.truncated(rng.randrange(p**N), N, p)


# -- text encoding -------------------------------------------------------------

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def format_scalar(x: PAdicScalar) -> str:
    """Exact: 'a/b' (or 'a').  Truncated: '0.d0d1...d_{N-1}@p', least
    significant digit first."""
    if x.is_exact:
        return str(x.value)
    r = x.residue
    digits = []
    for _ in range(x.precision):
        r, d = divmod(r, x.p)
        digits.append(_DIGITS[d])
    return "0." + "".join(digits) + f"@{x.p}"


def parse_scalar(text: str, p: int | None = None) -> PAdicScalar:
    text = text.strip()
    if "@" in text:
        body, _, ptxt = text.partition("@")
        q = Prime(int(ptxt))
        if p is not None and p != q:
            raise InvalidInput(f"scalar is {q}-adic, expected {p}")
        if not body.startswith("0."):
            raise InvalidInput(f"malformed truncated scalar {text!r}")
        digits = body[2:]
        if not digits:
            raise InvalidInput("truncated scalar needs at least one digit")
        r = 0
        for i, ch in enumerate(digits):
            d = _DIGITS.find(ch.lower())
            if d < 0 or d >= q:
                raise InvalidInput(f"bad base-{q} digit {ch!r}")
            r += d * q**i
        return PAdicScalar.truncated(r, len(digits), q)
    if p is None:
        raise InvalidInput("exact scalars need a prime")
    try:
        return PAdicScalar.exact(Fraction(text), p)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInput(f"malformed rational {text!r}") from exc


def parse_vector(text: str, p: int) -> tuple[PAdicScalar, ...]:
    """Comma-separated scalars, e.g. '3/5, 0.1011@2'."""
    parts = [t for t in text.split(",") if t.strip()]
    if not parts:
        raise InvalidInput("empty vector")
    return tuple(parse_scalar(t, p) for t in parts)
