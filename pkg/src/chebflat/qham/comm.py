"""Matrix commutator polynomials p(X|A) = sum_i a_i [X, A]_i.

[X, A]_0 = A and [X, A]_{i+1} = X [X, A]_i - [X, A]_i X.  All functions
accept a stack of matrices for A (shape (..., d, d)) and apply the map to
each one.
"""

from __future__ import annotations

import numpy as np

from ..chebpoly import ChebSeries, MonoPoly


def _check(X, A):
    X = np.asarray(X)
    A = np.asarray(A)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or A.shape[-2:] != X.shape:
        raise ValueError(f"dimension mismatch: X {X.shape}, A {A.shape}")
    return X, A


def _ad(X, M):
    return X @ M - M @ X


def nested_comm(X, A, i: int) -> np.ndarray:
    X, A = _check(X, A)
    if i < 0:
        raise ValueError("nesting depth must be non-negative")
    out = A
    for _ in range(i):
        out = _ad(X, out)
    return out


def comm_poly_apply(p: MonoPoly, X, A) -> np.ndarray:
    """sum_i c_i [X, A]_i, one extra commutator per degree."""
    X, A = _check(X, A)
    cs = [complex(c) for c in p.coeffs]
    term = A.astype(complex)
    out = cs[0] * term
    for c in cs[1:]:
        term = _ad(X, term)
        out = out + c * term
    return out


def comm_poly2_apply(coeffs: dict, X, Y, A) -> np.ndarray:
    """sum a_ij [X, [Y, A]_j]_i for a dict {(i, j): a_ij}."""
    X, A = _check(X, A)
    Y, _ = _check(Y, A)
    if not coeffs:
        return np.zeros_like(A, dtype=complex)
    jmax = max(j for _, j in coeffs)
    inner = [A.astype(complex)]
    for _ in range(jmax):
        inner.append(_ad(Y, inner[-1]))
    out = np.zeros_like(inner[0])
    for (i, j), a in coeffs.items():
        out = out + a * nested_comm(X, inner[j], i)
    return out


def series_comm_apply(s: ChebSeries, X, A) -> np.ndarray:
    """sum_n c_n T_n(ad_X / scale)(A) by Clenshaw's recurrence on the ad map."""
    X, A = _check(X, A)
    A = A.astype(complex)
    Xs = X / s.scale
    c = s.coeffs
    b1 = np.zeros_like(A)
    b2 = np.zeros_like(A)
    for j in range(len(c) - 1, 0, -1):
        b1, b2 = 2.0 * _ad(Xs, b1) - b2 + c[j] * A, b1
    return _ad(Xs, b1) - b2 + c[0] * A


def flat_comm_apply(q, X, A) -> np.ndarray:
    """Q(X|A) for a FlatApprox, applying one factor after another.

    Polynomials in ad_X commute, so the product of factors is the
    composition of the factor maps.  Chebyshev factors use Clenshaw, which
    avoids the cancellation of the power-basis sum.
    """
    X, A = _check(X, A)
    out = A.astype(complex)
    for f in q.factors:
        if isinstance(f, ChebSeries):
            out = series_comm_apply(f, X, out)
        else:
            out = comm_poly_apply(f, X, out)
    return out
