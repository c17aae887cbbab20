"""Chebyshev polynomials, scaled Chebyshev series and monomial conversion.

A :class:`ChebSeries` represents ``sum_n a_n T_n(x / t)`` on the base
interval ``[-t, t]``.  Evaluation inside the interval is plain float64
Clenshaw; outside it the backward recurrence runs in MPFR so that the
exponentially growing ``T_n`` values do not wipe out the sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, fsum
from typing import Sequence

import numpy as np

from ._backend import kernels

#: float-mode monomial conversion is refused above this degree
FLOAT_MONOMIAL_CAP = 60
#: MPFR precision (bits) used for evaluation outside [-t, t]
EXT_PREC = 256


class OverflowFlag(ArithmeticError):
    """Raised when an extended-precision evaluation leaves the float64 range."""


def cheb_T(n: int, x):
    """T_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 1 + 0 * x
    t0, t1 = 1 + 0 * x, x
    for _ in range(n - 1):
        t0, t1 = t1, 2 * x * t1 - t0
    return t1


def cheb_U(n: int, x):
    """Second-kind U_n(x): U_0 = 1, U_1 = 2x, U_{n+1} = 2x U_n - U_{n-1}."""
    if n < 0:
        raise ValueError("n must be non-negative")
    u0, u1 = 1 + 0 * x, 2 * x
    if n == 0:
        return u0
    for _ in range(n - 1):
        u0, u1 = u1, 2 * x * u1 - u0
    return u1


def cheb_T_monomial(n: int) -> list[int]:
    """Integer power-basis coefficients of T_n from the closed form.

    c[n-2k] = (n/2) (-1)^k (n-k-1)! / (k! (n-2k)!) 2^(n-2k), rewritten as
    n C(n-k, k) 2^(n-2k-1) / (n-k) so everything stays in integers.
    """
    if n == 0:
        return [1]
    c = [0] * (n + 1)
    for k in range(n // 2 + 1):
        p = n - 2 * k
        num = n * comb(n - k, k) * 2 ** p
        c[p] = (-1) ** k * (num // (2 * (n - k)))
    return c


def cheb_U_monomial(n: int) -> list[int]:
    """Integer power-basis coefficients of U_n via the recurrence."""
    u0, u1 = [1], [0, 2]
    if n == 0:
        return u0
    for _ in range(n - 1):
        nxt = [0] + [2 * c for c in u1]
        for i, c in enumerate(u0):
            nxt[i] -= c
        u0, u1 = u1, nxt
    return u1


def _degree(coeffs) -> int:
    for i in range(len(coeffs) - 1, -1, -1):
        if coeffs[i] != 0:
            return i
    return 0


@dataclass(frozen=True)
class ChebSeries:
    """sum_n coeffs[n] T_n(x / scale).

    Trailing zeros are kept in storage; :meth:`degree` skips them.
    ``coeffs_lo`` optionally carries the low halves of double-double
    coefficients.  Only the extended-precision path reads them: far outside
    [-t, t] the terms cancel heavily and float64 coefficient rounding alone
    would dominate the result.
    """

    coeffs: np.ndarray
    scale: float = 1.0
    coeffs_lo: np.ndarray | None = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).ravel()
        if c.size == 0:
            raise ValueError("ChebSeries needs at least one coefficient")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "scale", float(self.scale))
        if self.coeffs_lo is not None:
            lo = np.array(self.coeffs_lo, dtype=np.float64).ravel()
            if lo.shape != c.shape:
                raise ValueError("coeffs_lo must match coeffs in length")
            lo.setflags(write=False)
            object.__setattr__(self, "coeffs_lo", lo)

    def low_parts(self) -> np.ndarray:
        return self.coeffs_lo if self.coeffs_lo is not None else np.zeros_like(self.coeffs)

    def exact_coeffs(self) -> list[Fraction]:
        """Coefficients as exact rationals (hi + lo when present)."""
        lo = self.low_parts()
        return [Fraction(float(h)) + Fraction(float(l)) for h, l in zip(self.coeffs, lo)]

    def truncate(self, N: int) -> "ChebSeries":
        lo = None if self.coeffs_lo is None else self.coeffs_lo[:N + 1]
        return ChebSeries(self.coeffs[:N + 1], self.scale, lo)

    def degree(self) -> int:
        return _degree(self.coeffs)

    def __call__(self, x):
        return series_eval(self, x)

    def __len__(self):
        return len(self.coeffs)


@dataclass(frozen=True)
class MonoPoly:
    """Power-basis polynomial sum_q coeffs[q] x^q.

    ``coeffs`` is a float array, or a tuple of :class:`~fractions.Fraction`
    when built in exact mode (``exact`` is then True).
    """

    coeffs: object
    exact: bool = False

    def __post_init__(self):
        if self.exact:
            c = tuple(Fraction(v) for v in self.coeffs)
        else:
            c = np.array(self.coeffs, dtype=np.float64).ravel()
            c.setflags(write=False)
        if len(c) == 0:
            raise ValueError("MonoPoly needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    def degree(self) -> int:
        return _degree(self.coeffs)

    def __call__(self, x):
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def to_float(self) -> "MonoPoly":
        if not self.exact:
            return self
        return MonoPoly([float(c) for c in self.coeffs])


def series_eval(s: ChebSeries, x, *, prec: int = EXT_PREC):
    """Evaluate the series at scalar or array ``x``.

    Points with |x/t| > 1 go through the MPFR product kernel.
    Raises :class:`OverflowFlag` if a value exceeds the float64 range.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = xs / s.scale
    out = np.empty_like(xs)
    inside = np.abs(y) <= 1.0
    if inside.any():
        out[inside] = kernels.clenshaw(s.coeffs, np.ascontiguousarray(y[inside]))
    if (~inside).any():
        vals, over = kernels.product_eval_ext(
            [s.coeffs], [s.low_parts()], np.ascontiguousarray(xs[~inside]), s.scale, prec)
        if over.any():
            raise OverflowFlag(f"series value overflows float64 at x={xs[~inside][over][0]!r}")
        out[~inside] = vals
    return float(out[0]) if scalar else out


def series_mul(s1: ChebSeries, s2: ChebSeries) -> ChebSeries:
    """Exact Chebyshev-basis product using T_m T_n = (T_{m+n} + T_{|m-n|}) / 2."""
    if s1.scale != s2.scale:
        raise ValueError(f"scale mismatch: {s1.scale} vs {s2.scale}")
    return ChebSeries(kernels.cheb_mul(s1.coeffs, s2.coeffs), s1.scale)


def series_mul_exact(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    """Rational version of :func:`series_mul` on raw coefficient lists."""
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for m, am in enumerate(a):
        if am == 0:
            continue
        for n, bn in enumerate(b):
            p = am * bn / 2
            out[m + n] += p
            out[abs(m - n)] += p
    return out


def to_monomial(s: ChebSeries, exact: bool = False) -> MonoPoly:
    """Expand sum a_n T_n(x/t) in powers of x.

    Float mode is capped at degree :data:`FLOAT_MONOMIAL_CAP`; above that the
    conversion is too ill-conditioned and ``exact=True`` is required.
    """
    return coeffs_to_monomial(s.coeffs, s.scale, exact=exact)


def coeffs_to_monomial(coeffs, scale, exact: bool = False) -> MonoPoly:
    deg = _degree(coeffs)
    if not exact and deg > FLOAT_MONOMIAL_CAP:
        raise ValueError(
            f"degree {deg} exceeds the float-mode cap {FLOAT_MONOMIAL_CAP}; use exact=True")
    if exact:
        inv = 1 / Fraction(scale)
        out = [Fraction(0)] * (deg + 1)
        for n in range(deg + 1):
            a = Fraction(coeffs[n])
            if a == 0:
                continue
            for j, c in enumerate(cheb_T_monomial(n)):
                if c:
                    out[j] += a * c
        pw = Fraction(1)
        for j in range(deg + 1):
            out[j] *= pw
            pw *= inv
        return MonoPoly(out, exact=True)
    cols = [[] for _ in range(deg + 1)]
    for n in range(deg + 1):
        a = float(coeffs[n])
        if a == 0.0:
            continue
        for j, c in enumerate(cheb_T_monomial(n)):
            if c:
                cols[j].append(a * float(c))
    inv = 1.0 / float(scale)
    return MonoPoly([fsum(col) * inv ** j if col else 0.0
                     for j, col in enumerate(cols)])
