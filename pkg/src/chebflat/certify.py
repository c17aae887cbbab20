"""Exact sign certification of the Chebyshev-truncation comparison polynomial.

G_N(x) = I_{N+1}(1) U_{N-1}(x) + I_N(1) U_{N-2}(x) - I_N(1) + I_N(1) T_N(x)

must be positive (N even) or negative (N odd) on (-inf, -1).  Dividing by
I_N(1) leaves a single irrational r = I_{N+1}(1)/I_N(1):

    G_N / I_N(1) = A(x) + r B(x),   A = U_{N-2} - 1 + T_N,  B = U_{N-1},

with A, B integer polynomials.  For fixed x this is affine in r, so if both
end-point polynomials A + r_lo B and A + r_hi B (rational, exact) have the
claimed sign on the window, every polynomial in between does too, in
particular the true one.  Each end point is handled with an exact Sturm
chain, a Cauchy root radius, and exact sign evaluations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, gcd, lcm
from typing import Sequence

try:
    from gmpy2 import gcd as _gcd, mpz as _int
except ImportError:  # pragma: no cover
    _int = int
    _gcd = gcd

from .bessel import EnclosedReal, bessel_I, bessel_leading_term
from .chebpoly import cheb_T_monomial, cheb_U_monomial

#: right end of the main window is -1 - STRIP; (-1 - STRIP, -1) is counted separately
STRIP = Fraction(1, 1024)


class IndeterminateDegree(ArithmeticError):
    """Leading-coefficient enclosure contains zero."""


@dataclass(frozen=True)
class Indeterminate:
    """A sign decision could not be made on the current enclosures."""

    index: int
    reason: str
    hint_bits: int | None = None

    def __bool__(self):
        return False


class IntervalPoly:
    """Polynomial with EnclosedReal coefficients, lowest degree first."""

    def __init__(self, coeffs: Sequence):
        cs = [c if isinstance(c, EnclosedReal) else EnclosedReal.point(c) for c in coeffs]
        while len(cs) > 1 and cs[-1].lo == 0 and cs[-1].hi == 0:
            cs.pop()
        if cs[-1].sign() is None and len(cs) > 1:
            raise IndeterminateDegree("leading coefficient enclosure contains zero")
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_exact(self) -> bool:
        return all(c.lo == c.hi for c in self.coeffs)

    def point_coeffs(self) -> list[Fraction]:
        return [c.lo for c in self.coeffs]

    def __call__(self, x) -> EnclosedReal:
        x = Fraction(x)
        acc = EnclosedReal.point(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __repr__(self):
        return f"IntervalPoly(degree={self.degree})"


# ---------------------------------------------------------------------------
# integer polynomial helpers (lists of ints, lowest degree first)

def _trim(p):
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _primitive(p):
    g = _int(0)
    for c in p:
        g = _gcd(g, c)
        if g == 1:
            return p
    if g > 1:
        p = [c // g for c in p]
    return p


def _derivative(p):
    return [i * p[i] for i in range(1, len(p))] or [_int(0)]


def _neg_scaled_rem(a, b):
    """Positive multiple of -rem(a, b), content removed."""
    a = list(a)
    db = len(b) - 1
    lb = b[-1]
    steps = 0
    while len(a) - 1 >= db and any(a):
        la = a[-1]
        shift = len(a) - 1 - db
        a = [c * lb for c in a]
        for i, bc in enumerate(b):
            a[i + shift] -= la * bc
        a.pop()
        _trim(a)
        steps += 1
    if not any(a):
        return [_int(0)]
    sgn = -1 if (lb < 0 and steps % 2 == 1) else 1
    return _primitive([-sgn * c for c in a])


def sturm_chain(p: Sequence[int]) -> list[list]:
    """Sturm sequence p, p', -rem, ... for an integer polynomial."""
    p0 = _primitive(_trim([_int(c) for c in p]))
    chain = [p0]
    if len(p0) == 1:
        return chain
    p1 = _primitive(_derivative(p0))
    chain.append(p1)
    while len(chain[-1]) > 1:
        r = _neg_scaled_rem(chain[-2], chain[-1])
        if len(r) == 1 and r[0] == 0:
            break
        chain.append(r)
    return chain


def _sign_at(p, x: Fraction) -> int:
    """Sign of the integer polynomial p at a rational point (homogenised Horner)."""
    # acc = sum_i c_i num^i den^(n-i), which has the sign of p(x) since den > 0
    num, den = _int(x.numerator), _int(x.denominator)
    n = len(p) - 1
    acc = _int(p[n])
    dpow = _int(1)
    for i in range(n - 1, -1, -1):
        dpow *= den
        acc = acc * num + p[i] * dpow
    return (acc > 0) - (acc < 0)


def _variations(chain, x: Fraction) -> int:
    signs = [s for s in (_sign_at(p, x) for p in chain) if s != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if u != v)


def _to_integer_poly(coeffs: Sequence[Fraction]) -> list:
    den = 1
    for c in coeffs:
        den = lcm(den, Fraction(c).denominator)
    return [_int(Fraction(c).numerator * (den // Fraction(c).denominator)) for c in coeffs]


def sturm_count_exact(coeffs: Sequence, a, b, chain=None) -> int:
    """Distinct real roots of a rational polynomial in (a, b]."""
    a, b = Fraction(a), Fraction(b)
    if not a < b:
        raise ValueError("need a < b")
    if chain is None:
        chain = sturm_chain(_to_integer_poly(coeffs))
    if _sign_at(chain[0], a) == 0:
        raise ValueError("left end point is a root")
    return _variations(chain, a) - _variations(chain, b)


# ---------------------------------------------------------------------------
# interval Sturm chain (generic, for genuinely interval coefficients)

def _interval_chain(p: IntervalPoly):
    P0 = list(p.coeffs)
    P1 = [c * i for i, c in enumerate(P0)][1:]
    chain = [P0, P1]
    while len(chain[-1]) > 1:
        a, b = list(chain[-2]), chain[-1]
        lb = b[-1]
        if lb.sign() is None:
            return None, len(chain) - 1
        while len(a) >= len(b):
            q = a[-1] / lb
            shift = len(a) - len(b)
            for i, bc in enumerate(b):
                a[i + shift] = a[i + shift] - q * bc
            a.pop()
        while len(a) > 1 and a[-1].sign() is None:
            # cannot tell whether the degree really dropped
            if a[-1].lo == 0 and a[-1].hi == 0:
                a.pop()
            else:
                return None, len(chain)
        if not a or (len(a) == 1 and a[0].lo == 0 and a[0].hi == 0):
            break
        chain.append([-c for c in a])
    return chain, None


def _interval_eval(p, x):
    acc = EnclosedReal.point(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def sturm_count(p: IntervalPoly, a, b):
    """Distinct real roots in (a, b] for every polynomial in the enclosure.

    Exact polynomials use an exact integer Sturm chain.  Interval
    polynomials use an interval chain; any sign that cannot be decided
    yields an :class:`Indeterminate` carrying the chain index.
    """
    a, b = Fraction(a), Fraction(b)
    if not a < b:
        raise ValueError("need a < b")
    if p.is_exact:
        return sturm_count_exact(p.point_coeffs(), a, b)
    chain, bad = _interval_chain(p)
    if chain is None:
        return Indeterminate(bad, "chain leading coefficient straddles zero",
                             _hint_bits(p))
    counts = []
    for x in (a, b):
        signs = []
        for i, q in enumerate(chain):
            v = _interval_eval(q, x)
            if v.lo == 0 and v.hi == 0:
                continue  # exact zero, skipped as in the exact count
            s = v.sign()
            if s is None:
                return Indeterminate(i, f"sign of chain element {i} at {x} undecided",
                                     _hint_bits(p))
            signs.append(s)
        counts.append(sum(1 for u, v in zip(signs, signs[1:]) if u != v))
    return counts[0] - counts[1]


def _hint_bits(p: IntervalPoly) -> int:
    w = max(c.width for c in p.coeffs)
    if w == 0:
        return 0
    return 2 * max(1, w.denominator.bit_length() - w.numerator.bit_length())


def cauchy_bound(p: IntervalPoly) -> Fraction:
    """R = 1 + max_i |c_i| / |c_deg| with outer bounds; all real roots lie in [-R, R]."""
    lead = p.coeffs[-1].abs_lo()
    if lead == 0:
        raise IndeterminateDegree("leading coefficient enclosure contains zero")
    if p.degree == 0:
        return Fraction(1)
    return 1 + max(c.abs_hi() for c in p.coeffs[:-1]) / lead


# ---------------------------------------------------------------------------
# the comparison polynomial

def _gn_parts(N: int):
    """Integer polynomials A = U_{N-2} - 1 + T_N and B = U_{N-1}."""
    A = [0] * (N + 1)
    for i, c in enumerate(cheb_U_monomial(N - 2)):
        A[i] += c
    A[0] -= 1
    for i, c in enumerate(cheb_T_monomial(N)):
        A[i] += c
    B = cheb_U_monomial(N - 1) + [0]
    return A, B


def _check_N(N):
    if N < 2:
        raise ValueError("N must be at least 2 (U_{N-2} must exist)")


def build_GN(N: int, tol) -> IntervalPoly:
    """G_N in the monomial basis with I_N(1), I_{N+1}(1) enclosed to ``tol``."""
    _check_N(N)
    IN = bessel_I(N, 1, tol)
    IN1 = bessel_I(N + 1, 1, tol)
    A, B = _gn_parts(N)
    return IntervalPoly([IN * a + IN1 * b for a, b in zip(A, B)])


def gn_ratio(N: int, bits: int) -> EnclosedReal:
    """Enclosure of I_{N+1}(1) / I_N(1) with relative Bessel tolerance 2^-bits."""
    rel = Fraction(1, 1 << bits)
    IN = bessel_I(N, 1, bessel_leading_term(N, 1) * rel)
    IN1 = bessel_I(N + 1, 1, bessel_leading_term(N + 1, 1) * rel)
    return (IN1 / IN).rounded(bits + N.bit_length() + 8)


@dataclass(frozen=True)
class Certificate:
    N: int
    parity: str
    claim: str
    cauchy_radius: int
    root_count_in_window: int | None
    endpoint_signs: tuple
    status: str
    precision_used: int

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "parity": self.parity,
            "claim": self.claim,
            "cauchy_radius": self.cauchy_radius,
            "root_count": self.root_count_in_window,
            "endpoint_signs": list(self.endpoint_signs),
            "status": self.status,
            "bits": self.precision_used,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        return cls(d["N"], d["parity"], d["claim"], d["cauchy_radius"], d["root_count"],
                   tuple(d["endpoint_signs"]), d["status"], d["bits"])


@dataclass
class _VertexResult:
    ok: bool
    left_sign: int
    right_sign: int
    count: int


def _check_vertex(coeffs: Sequence[Fraction], claim: int, R: int) -> _VertexResult:
    p = _to_integer_poly(coeffs)
    chain = sturm_chain(p)
    left = Fraction(-R - 1)
    right = -1 - STRIP
    s_left = _sign_at(chain[0], left)
    s_right = _sign_at(chain[0], right)
    deg = len(chain[0]) - 1
    lead_at_minus_inf = (1 if chain[0][-1] > 0 else -1) * (-1) ** deg
    count = _variations(chain, left) - _variations(chain, right)
    # strip (-1 - STRIP, -1): roots in (right, -1] minus a root exactly at -1
    strip = _variations(chain, right) - _variations(chain, Fraction(-1))
    if _sign_at(chain[0], Fraction(-1)) == 0:
        strip -= 1
    count += strip
    ok = count == 0 and s_left == claim and s_right == claim and lead_at_minus_inf == claim
    return _VertexResult(ok, s_left, s_right, count)


def certify_segment(A: Sequence, B: Sequence, r: EnclosedReal, claim: int):
    """Certify sign(A + r B) == claim on (-inf, -1) for every r in the enclosure.

    Generic hook: callers with a differently scaled comparison polynomial
    supply their own A, B and r.  Returns (status, R, count, signs).
    """
    n = max(len(A), len(B))
    A = list(A) + [0] * (n - len(A))
    B = list(B) + [0] * (n - len(B))
    ip = IntervalPoly([EnclosedReal.point(a) + r * b for a, b in zip(A, B)])
    R = ceil(cauchy_bound(ip))
    vs = [_check_vertex([Fraction(a) + rv * b for a, b in zip(A, B)], claim, R)
          for rv in (r.lo, r.hi)]
    count = max(v.count for v in vs)
    signs = tuple(vs[0].__dict__[k] if vs[0].__dict__[k] == vs[1].__dict__[k] else 0
                  for k in ("left_sign", "right_sign"))
    if all(v.ok for v in vs):
        return "certified", R, count, signs
    if any(s == -claim for s in signs):
        return "refuted", R, count, signs
    return "indeterminate", R, count, signs


def certify_sign(N: int, max_bits: int = 1024, start_bits: int = 16) -> Certificate:
    """Certify the parity claim for G_N, doubling Bessel precision on failure."""
    _check_N(N)
    claim = 1 if N % 2 == 0 else -1
    A, B = _gn_parts(N)
    bits = start_bits
    while True:
        r = gn_ratio(N, bits)
        status, R, count, signs = certify_segment(A, B, r, claim)
        if status != "indeterminate" or bits * 2 > max_bits:
            break
        bits *= 2
    return Certificate(
        N=N, parity="even" if claim > 0 else "odd",
        claim="positive" if claim > 0 else "negative",
        cauchy_radius=int(R), root_count_in_window=count,
        endpoint_signs=signs, status=status, precision_used=bits)
