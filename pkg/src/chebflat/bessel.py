"""Modified Bessel functions of the first kind with rigorous rational enclosures.

I_v(x) = sum_m (x/2)^(2m+v) / (m! (m+v)!) for integer v >= 0 and x > 0.
Partial sums are exact rationals; the tail is bounded by a geometric
majorant once the term ratio drops below 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, floor, ceil


class EnclosureError(ArithmeticError):
    """The requested width could not be reached within the term budget."""

    def __init__(self, msg, achieved_width):
        super().__init__(msg)
        self.achieved_width = achieved_width


@dataclass(frozen=True)
class EnclosedReal:
    """A real constant known to lie in [lo, hi] (rational endpoints)."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if lo > hi:
            raise ValueError(f"empty enclosure [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, value) -> "EnclosedReal":
        v = Fraction(value)
        return cls(v, v)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __contains__(self, value) -> bool:
        return self.lo <= Fraction(value) <= self.hi

    def __float__(self) -> float:
        return float(self.mid)

    def sign(self):
        """+1 / -1 when the enclosure excludes zero, else None."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        return None

    def rounded(self, bits: int) -> "EnclosedReal":
        """Outward rounding onto the dyadic grid 2**-bits (keeps rationals small)."""
        s = 1 << bits
        return EnclosedReal(Fraction(floor(self.lo * s), s), Fraction(ceil(self.hi * s), s))

    def __add__(self, other):
        o = _as_enclosure(other)
        return EnclosedReal(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return EnclosedReal(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-_as_enclosure(other))

    def __rsub__(self, other):
        return _as_enclosure(other) - self

    def __mul__(self, other):
        o = _as_enclosure(other)
        p = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return EnclosedReal(min(p), max(p))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_enclosure(other)
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError("divisor enclosure contains zero")
        return self * EnclosedReal(1 / o.hi, 1 / o.lo)

    def abs_hi(self) -> Fraction:
        return max(abs(self.lo), abs(self.hi))

    def abs_lo(self) -> Fraction:
        if self.lo <= 0 <= self.hi:
            return Fraction(0)
        return min(abs(self.lo), abs(self.hi))


def _as_enclosure(v) -> EnclosedReal:
    return v if isinstance(v, EnclosedReal) else EnclosedReal.point(v)


def _positive_series(first, ratio, tol, max_terms):
    """Enclose sum_m term_m with term_{m+1} = term_m * ratio(m), ratio decreasing."""
    total = Fraction(0)
    term = first
    for m in range(max_terms):
        q = ratio(m)
        if q < Fraction(1, 2):
            tail = term / (1 - q)
            if tail <= tol:
                return EnclosedReal(total, total + tail)
        total += term
        term *= q
    raise EnclosureError(
        f"tolerance {float(tol):.3g} not reached in {max_terms} terms", term)


def _finalize(enc: EnclosedReal, tol: Fraction) -> EnclosedReal:
    # outward-round to a dyadic grid of spacing <= tol/4
    bits = max(0, ceil(-_log2(tol / 4)))
    return enc.rounded(bits)


def _log2(q: Fraction) -> float:
    return q.numerator.bit_length() - q.denominator.bit_length()


def bessel_I(v: int, x, tol, max_terms: int = 100_000) -> EnclosedReal:
    """Enclosure of I_v(x) of width <= tol.

    ``x`` and ``tol`` may be ints, Fractions, decimal strings or floats (floats
    are taken at their exact binary value).
    """
    if v < 0 or int(v) != v:
        raise ValueError("order must be a non-negative integer")
    x = Fraction(x)
    tol = Fraction(tol)
    if x <= 0:
        raise ValueError("x must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = x / 2
    h2 = h * h
    first = h ** v / factorial(v)
    enc = _positive_series(first, lambda m: h2 / ((m + 1) * (m + v + 1)), tol / 2, max_terms)
    return _finalize(enc, tol)


def cosh_enclosure(x, tol) -> EnclosedReal:
    x = Fraction(x)
    tol = Fraction(tol)
    x2 = x * x
    enc = _positive_series(Fraction(1), lambda m: x2 / ((2 * m + 1) * (2 * m + 2)), tol / 2, 100_000)
    return _finalize(enc, tol)


def bessel_leading_term(v: int, x) -> Fraction:
    """(x/2)^v / v!, the first series term and the lower bound."""
    return (Fraction(x) / 2) ** v / factorial(v)


@lru_cache(maxsize=None)
def _bessel_dd(v: int, x: Fraction) -> tuple[float, float]:
    enc = bessel_I(v, x, bessel_leading_term(v, x) / (1 << 120))
    hi = float(enc.mid)
    return hi, float(enc.mid - Fraction(hi))


def bessel_I_float(v: int, x) -> float:
    """I_v(x) rounded to float64 from a 2^-120 relative enclosure."""
    return _bessel_dd(int(v), Fraction(x))[0]


def bessel_I_dd(v: int, x) -> tuple[float, float]:
    """I_v(x) as a double-double pair (hi, lo), hi + lo accurate to ~2^-105."""
    return _bessel_dd(int(v), Fraction(x))


def check_bessel_bounds(v: int, x, max_refinements: int = 12):
    """Certify (x/2)^v/v! < I_v(x) < cosh(x) (x/2)^v/v!.

    Returns True (certified), False (a bound is certainly violated) or None
    when the enclosures never became narrow enough to decide.
    """
    x = Fraction(x)
    if x <= 0:
        raise ValueError("x must be positive")
    lead = bessel_leading_term(v, x)
    for r in range(max_refinements):
        rel = Fraction(1, 1 << (16 + 8 * r))
        I = bessel_I(v, x, lead * rel)
        ch = cosh_enclosure(x, rel)
        upper = ch * lead
        if I.hi <= lead or I.lo >= upper.hi:
            return False
        if I.lo > lead and I.hi < upper.lo:
            return True
    return None
