"""Chebyshev expansion of e^x and the flat product approximation Q_{k,l}.

Q_{k,l}(x) = prod_{i=1..k} f_{2^i l}(x / k), where f_N is the order-N
truncation of e^x = I_0(t) + 2 sum_n I_n(t) T_n(x / t).  The 1/k argument
scaling is folded into the series scale: every factor is a ChebSeries with
scale k*t.

The half-width t of the accuracy interval plays the role of K in the
(eps, eta, K)-flatness definition.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np

from ._backend import kernels
from .bessel import bessel_I_dd
from .chebpoly import (EXT_PREC, ChebSeries, MonoPoly, OverflowFlag, coeffs_to_monomial,
                       series_mul, series_mul_exact)

INNER_POINTS = 10_001
OUTER_POINTS = 400
OUTER_FACTOR = 50.0


def exp_cheb_coeffs(t: float, N: int) -> ChebSeries:
    """Order-N Chebyshev truncation of e^x on [-t, t]: a_0 = I_0(t), a_n = 2 I_n(t).

    Coefficients are stored as double-double pairs (see ChebSeries.coeffs_lo).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    pairs = [bessel_I_dd(n, t) for n in range(N + 1)]
    hi = [h if n == 0 else 2.0 * h for n, (h, _) in enumerate(pairs)]
    lo = [l if n == 0 else 2.0 * l for n, (_, l) in enumerate(pairs)]
    return ChebSeries(hi, t, lo)


def choose_truncation_order(t: float, eps: float) -> int:
    """Smallest integer N >= e t + ln(1/eps)."""
    _check_eps(eps)
    if not t > 0:
        raise ValueError("t must be positive")
    return math.ceil(math.e * t + math.log(1.0 / eps))


def taylor_truncation_order(t: float, eps: float) -> int:
    """Taylor counterpart: N >= 10 t + ln(1/eps)."""
    _check_eps(eps)
    return math.ceil(10.0 * t + math.log(1.0 / eps))


def _check_eps(eps):
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


@dataclass(frozen=True)
class FlatParams:
    eps: float
    eta: float
    t: float
    k: int
    l: int
    degree_bound: int

    def orders(self) -> list[int]:
        return [2 ** i * self.l for i in range(1, self.k + 1)]


def choose_flat_params(eps: float, eta: float, t: float) -> FlatParams:
    """k = ceil(1/eta), l = ceil((( e + 1) t + ln(k/eps)) / 2)."""
    _check_eps(eps)
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if not t > 0:
        raise ValueError("t must be positive")
    k = math.ceil(1.0 / eta)
    l = math.ceil(0.5 * ((math.e + 1.0) * t + math.log(k / eps)))
    return FlatParams(eps, eta, t, k, l, l * (2 ** (k + 1) - 2))


@dataclass(frozen=True)
class FlatApprox:
    """Ordered factors of Q_{k,l}.

    ``basis`` is "chebyshev" (factors are ChebSeries with scale k*t) or
    "taylor" (factors are MonoPoly in x).  ``reduction_certified`` maps each
    factor order to the certification status recorded at build time, or is
    empty when no certificates were supplied.
    """

    params: FlatParams
    factors: tuple
    basis: str = "chebyshev"
    reduction_certified: dict = field(default_factory=dict)

    def degree(self) -> int:
        return sum(f.degree() for f in self.factors)

    def __call__(self, x):
        return eval_flat(self, x)


def build_flat(params: FlatParams, certificates=None) -> FlatApprox:
    """Assemble Q_{k,l}; factor i truncates the exp series at order 2^i l.

    ``certificates`` (optional) maps order N to a certificate-like object
    with a ``status`` attribute; statuses for the factor orders are recorded.
    """
    scale = params.k * params.t
    base = exp_cheb_coeffs(params.t, params.orders()[-1])
    base = ChebSeries(base.coeffs, scale, base.coeffs_lo)
    factors = tuple(base.truncate(N) for N in params.orders())
    status = {}
    if certificates is not None:
        for N in params.orders():
            cert = certificates.get(N)
            status[N] = cert.status if cert is not None else "missing"
    return FlatApprox(params, factors, "chebyshev", status)


def taylor_flat_baseline(eps: float, eta: float, t: float) -> FlatApprox:
    """Same product structure with Taylor truncations of e^{x/k}.

    Orders are 2^i l_T with l_T = ceil((11 t + ln(k/eps)) / 2), the
    Chebyshev rule with e t replaced by the Taylor rate 10 t.
    """
    _check_eps(eps)
    k = math.ceil(1.0 / eta)
    l = math.ceil(0.5 * (11.0 * t + math.log(k / eps)))
    params = FlatParams(eps, eta, t, k, l, l * (2 ** (k + 1) - 2))
    factors = []
    for N in params.orders():
        c = [Fraction(1, math.factorial(j) * k ** j) for j in range(N + 1)]
        factors.append(MonoPoly([float(v) for v in c]))
    return FlatApprox(params, tuple(factors), "taylor")


def _taylor_product_ext(factors, xs, prec):
    out = np.empty(len(xs))
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        coeff_lists = [[gmpy2.mpfr(float(c)) for c in f.coeffs] for f in factors]
        for i, x in enumerate(xs):
            y = gmpy2.mpfr(float(x))
            acc = gmpy2.mpfr(1)
            for cs in coeff_lists:
                v = gmpy2.mpfr(0)
                for c in reversed(cs):
                    v = v * y + c
                acc *= v
            out[i] = float(acc)
    return out


def eval_flat(q: FlatApprox, x, *, prec: int = EXT_PREC):
    """Q(x): factor sums and their product accumulated in MPFR."""
    scalar = np.ndim(x) == 0
    xs = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)))
    if q.basis == "taylor":
        out = _taylor_product_ext(q.factors, xs, prec)
    else:
        out, over = kernels.product_eval_ext(
            [f.coeffs for f in q.factors], [f.low_parts() for f in q.factors],
            xs, q.factors[0].scale, prec)
        if over.any():
            raise OverflowFlag(f"Q overflows float64 at x={xs[over][0]!r}")
    return float(out[0]) if scalar else out


def expand_flat(q: FlatApprox, exact: bool = False):
    """Single-series and power-basis forms of Q.

    Returns ``(ChebSeries, MonoPoly)``.  In exact mode the product and the
    monomial conversion run on the exact binary values of the factor
    coefficients; the returned ChebSeries is then rounded to float64.
    """
    if q.basis != "chebyshev":
        raise ValueError("expand_flat needs Chebyshev factors")
    scale = q.factors[0].scale
    if exact:
        acc = product_coeffs_exact(q)
        mono = coeffs_to_monomial(acc, scale, exact=True)
        return ChebSeries([float(c) for c in acc], scale), mono
    s = q.factors[0]
    for f in q.factors[1:]:
        s = series_mul(s, f)
    return s, coeffs_to_monomial(s.coeffs, scale)


def product_coeffs_exact(q: FlatApprox) -> list[Fraction]:
    """Chebyshev coefficients of Q as exact rationals (no underflow at high order)."""
    acc = q.factors[0].exact_coeffs()
    for f in q.factors[1:]:
        acc = series_mul_exact(acc, f.exact_coeffs())
    return acc


def flat_grid(t: float, n_inner: int = INNER_POINTS, n_outer: int = OUTER_POINTS,
              outer_factor: float = OUTER_FACTOR) -> np.ndarray:
    """Uniform points on [-t, t] plus geometric spacing out to +-outer_factor*t."""
    inner = np.linspace(-t, t, n_inner)
    outer = t * np.geomspace(1.0, outer_factor, n_outer + 1)[1:]
    return np.concatenate([-outer[::-1], inner, outer])


@dataclass
class FlatReport:
    params: dict
    max_abs_err: float
    max_flat_ratio: float
    argmax_flat_ratio: float
    dominated_right: bool
    dominated_beyond_kt: bool
    grid: dict
    eta_checked: float
    accuracy_pass: bool
    flat_pass: bool
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def verify_flat_property(q: FlatApprox, n_inner: int = INNER_POINTS,
                         n_outer: int = OUTER_POINTS, outer_factor: float = OUTER_FACTOR,
                         eta: float | None = None) -> FlatReport:
    """Grid check of both flatness bullets.

    Accuracy: max |Q - e^x| on [-t, t] <= eps.  Flatness: |Q(x)| <=
    max(1, e^x) e^{eta |x|} on the whole grid, with no slack.  ``eta``
    overrides the checked slack without touching Q.
    """
    p = q.params
    eta_chk = p.eta if eta is None else eta
    xs = flat_grid(p.t, n_inner, n_outer, outer_factor)
    vals = eval_flat(q, xs)
    inner = np.abs(xs) <= p.t
    err = float(np.max(np.abs(vals[inner] - np.exp(xs[inner]))))
    with np.errstate(divide="ignore"):
        log_ratio = np.log(np.abs(vals)) - np.maximum(xs, 0.0) - eta_chk * np.abs(xs)
    i = int(np.argmax(log_ratio))
    ratio = float(np.exp(log_ratio[i]))
    with np.errstate(over="ignore"):
        ex = np.exp(xs)
    right = xs >= p.t
    dominated = bool(np.all(vals[right] <= ex[right]))
    # the factors see x/k, so truncation-from-below only kicks in past k*t
    far = xs >= p.k * p.t
    dominated_kt = bool(np.all(vals[far] <= ex[far]))
    acc_ok = err <= p.eps
    flat_ok = ratio <= 1.0
    return FlatReport(
        params=asdict(p), max_abs_err=err, max_flat_ratio=ratio,
        argmax_flat_ratio=float(xs[i]), dominated_right=dominated,
        dominated_beyond_kt=dominated_kt,
        grid={"inner_points": n_inner, "outer_points_per_side": n_outer,
              "outer_factor": outer_factor, "t": p.t},
        eta_checked=eta_chk, accuracy_pass=acc_ok, flat_pass=flat_ok,
        passed=acc_ok and flat_ok)


def verify_bounded(p: MonoPoly, d: int, C, slack: float = 0.0) -> bool:
    """(d, C)-boundedness: deg p <= d and |c_q| <= C/q! (+ slack) for all q."""
    if p.degree() > d:
        return False
    if p.exact:
        Cq = Fraction(C)
        sl = Fraction(slack)
        return all(abs(c) <= Cq / math.factorial(q) + sl for q, c in enumerate(p.coeffs))
    return all(abs(float(c)) <= C / math.factorial(q) + slack for q, c in enumerate(p.coeffs))


@dataclass(frozen=True)
class DecayCert:
    C1: float
    C2: float
    t: float
    range: tuple


class RegularDecayError(ValueError):
    def __init__(self, index, value):
        super().__init__(f"coefficient {index} is not positive ({value!r})")
        self.index = index


def _log(x) -> float:
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


def check_regular_decay(coeffs: Sequence, t: float) -> DecayCert:
    """C1 = min_n x_n n! (2/t)^n, C2 = max of the same; all x_n must be > 0.

    Accepts floats or Fractions (the latter avoid underflow of tiny
    high-order coefficients).
    """
    logs = []
    for n, x in enumerate(coeffs):
        if not x > 0:
            raise RegularDecayError(n, x)
        logs.append(_log(x) + math.lgamma(n + 1) + n * math.log(2.0 / t))
    C1, C2 = math.exp(min(logs)), math.exp(max(logs))
    if not (0 < C1 <= C2 < math.inf):
        raise ValueError("decay constants are not finite and positive")
    return DecayCert(C1, C2, t, (0, len(coeffs) - 1))


def bounding_constant(t: float, k: int, l: int, c: float) -> float:
    """C_{k,l} = c e^{t^2/4} (t/k)^{2^k l}; just c e^{t^2/4} when t <= k or t < 1."""
    base = c * math.exp(t * t / 4.0)
    if t <= k or t < 1:
        return base
    return base * (t / k) ** (2 ** k * l)


def degree_table(ts: Sequence[float], epss: Sequence[float]) -> list[dict]:
    """Chebyshev vs Taylor truncation orders over a (t, eps) matrix."""
    return [{"t": t, "eps": e, "chebyshev": choose_truncation_order(t, e),
             "taylor": taylor_truncation_order(t, e)} for t in ts for e in epss]
