"""Pure-Python fallback for the compiled kernels.

Same signatures and the same operation order as ``_kernels.pyx``; the
extended-precision path goes through gmpy2's MPFR bindings, so results agree
bit for bit with the compiled build.
"""

import numpy as np
import gmpy2

BACKEND = "python"

_DBL_MAX = np.finfo(np.float64).max


def clenshaw(coeffs, y):
    """Sum_n coeffs[n] T_n(y) for every y, double precision (vectorised over y)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    b1 = np.zeros_like(y)
    b2 = np.zeros_like(y)
    for c in coeffs[:0:-1]:
        b1, b2 = 2.0 * y * b1 - b2 + c, b1
    return y * b1 - b2 + coeffs[0]


def cheb_mul(a, b):
    """Coefficients of (sum a_m T_m)(sum b_n T_n) in the T basis."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.zeros(len(a) + len(b) - 1)
    for m, am in enumerate(a):
        p = 0.5 * am * b
        out[m:m + len(b)] += p
        # |m - n| terms: n <= m lands on m - n, n > m lands on n - m
        lo = p[:m + 1]
        out[m - len(lo) + 1:m + 1] += lo[::-1]
        hi = p[m + 1:]
        out[1:1 + len(hi)] += hi
    return out


def product_eval_ext(factors, factors_lo, x, scale, prec):
    """Product over factors of Clenshaw sums at y = x/scale, in MPFR.

    ``factors_lo`` holds the low halves of double-double coefficients (same
    shapes as ``factors``); both halves are added exactly.
    Returns (values rounded to float64, overflow mask).
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(len(x))
    over = np.zeros(len(x), dtype=bool)
    with gmpy2.context(gmpy2.get_context(), precision=prec) as ctx:
        ctx.round = gmpy2.RoundToNearest
        mscale = gmpy2.mpfr(float(scale))
        coeff_lists = [[gmpy2.mpfr(float(c)) for c in f] for f in factors]
        lo_lists = [[gmpy2.mpfr(float(c)) for c in f] for f in factors_lo]
        zero = gmpy2.mpfr(0)
        for i, xi in enumerate(x):
            y = gmpy2.mpfr(float(xi)) / mscale
            acc = gmpy2.mpfr(1)
            for cs, ls in zip(coeff_lists, lo_lists):
                b1 = zero
                b2 = zero
                for j in range(len(cs) - 1, 0, -1):
                    tmp = y * b1
                    tmp = gmpy2.mul_2exp(tmp, 1)
                    tmp = tmp - b2
                    tmp = tmp + cs[j]
                    tmp = tmp + ls[j]
                    b2 = b1
                    b1 = tmp
                val = y * b1
                val = val - b2
                val = val + cs[0]
                val = val + ls[0]
                acc = acc * val
            r = float(acc)
            out[i] = r
            if not np.isnan(r) and abs(r) > _DBL_MAX:
                over[i] = True
    return out, over
