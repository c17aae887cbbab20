# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: float64 Clenshaw, Chebyshev-basis product, and MPFR
Clenshaw/product evaluation for points outside the base interval.

Mirrors :mod:`chebflat._kernels_py` function for function.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from "mpfr.h":
    ctypedef struct __mpfr_struct:
        pass
    ctypedef __mpfr_struct mpfr_t[1]
    ctypedef __mpfr_struct *mpfr_ptr
    ctypedef long mpfr_prec_t
    ctypedef long mpfr_exp_t
    ctypedef enum mpfr_rnd_t:
        MPFR_RNDN
    void mpfr_init2(mpfr_ptr x, mpfr_prec_t prec)
    void mpfr_clear(mpfr_ptr x)
    int mpfr_set_d(mpfr_ptr rop, double op, mpfr_rnd_t rnd)
    int mpfr_set_ui(mpfr_ptr rop, unsigned long op, mpfr_rnd_t rnd)
    int mpfr_set(mpfr_ptr rop, mpfr_ptr op, mpfr_rnd_t rnd)
    int mpfr_mul(mpfr_ptr rop, mpfr_ptr a, mpfr_ptr b, mpfr_rnd_t rnd)
    int mpfr_mul_2ui(mpfr_ptr rop, mpfr_ptr a, unsigned long e, mpfr_rnd_t rnd)
    int mpfr_sub(mpfr_ptr rop, mpfr_ptr a, mpfr_ptr b, mpfr_rnd_t rnd)
    int mpfr_add_d(mpfr_ptr rop, mpfr_ptr a, double b, mpfr_rnd_t rnd)
    int mpfr_div_d(mpfr_ptr rop, mpfr_ptr a, double b, mpfr_rnd_t rnd)
    double mpfr_get_d(mpfr_ptr op, mpfr_rnd_t rnd)


BACKEND = "compiled"


def clenshaw(const double[::1] coeffs, const double[::1] y):
    """Sum_n coeffs[n] T_n(y) for every y, double precision.

    Points are the inner loop so the recurrence vectorises; the per-point
    operation order matches the Python fallback exactly.
    """
    cdef Py_ssize_t npts = y.shape[0], n = coeffs.shape[0], i, j
    cdef double tmp, c
    out = np.empty(npts, dtype=np.float64)
    b1a = np.zeros(npts, dtype=np.float64)
    b2a = np.zeros(npts, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] b1 = b1a
    cdef double[::1] b2 = b2a
    for j in range(n - 1, 0, -1):
        c = coeffs[j]
        for i in range(npts):
            tmp = 2.0 * y[i] * b1[i] - b2[i] + c
            b2[i] = b1[i]
            b1[i] = tmp
    for i in range(npts):
        o[i] = y[i] * b1[i] - b2[i] + coeffs[0]
    return out


def cheb_mul(const double[::1] a, const double[::1] b):
    """Coefficients of (sum a_m T_m)(sum b_n T_n) in the T basis."""
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], m, n, d
    out = np.zeros(na + nb - 1, dtype=np.float64)
    cdef double[::1] c = out
    cdef double p
    for m in range(na):
        for n in range(nb):
            p = 0.5 * a[m] * b[n]
            c[m + n] += p
            d = m - n if m >= n else n - m
            c[d] += p
    return out


def product_eval_ext(list factors, list factors_lo, const double[::1] x, double scale, long prec):
    """Product over factors of Clenshaw sums at y = x/scale, in MPFR.

    ``factors_lo`` holds the low halves of double-double coefficients (same
    shapes as ``factors``); both halves are added exactly.
    Returns (values rounded to float64, overflow mask).
    """
    cdef Py_ssize_t npts = x.shape[0], i, j, f, nf = len(factors)
    cdef const double[::1] c
    cdef const double[::1] clo
    cdef mpfr_t y, b1, b2, tmp, acc, val
    out = np.empty(npts, dtype=np.float64)
    over = np.zeros(npts, dtype=np.bool_)
    cdef double[::1] o = out
    cdef double r
    mpfr_init2(y, prec)
    mpfr_init2(b1, prec)
    mpfr_init2(b2, prec)
    mpfr_init2(tmp, prec)
    mpfr_init2(acc, prec)
    mpfr_init2(val, prec)
    try:
        for i in range(npts):
            mpfr_set_d(y, x[i], MPFR_RNDN)
            mpfr_div_d(y, y, scale, MPFR_RNDN)
            mpfr_set_ui(acc, 1, MPFR_RNDN)
            for f in range(nf):
                c = factors[f]
                clo = factors_lo[f]
                mpfr_set_ui(b1, 0, MPFR_RNDN)
                mpfr_set_ui(b2, 0, MPFR_RNDN)
                for j in range(c.shape[0] - 1, 0, -1):
                    # tmp = 2*y*b1 - b2 + c_j
                    mpfr_mul(tmp, y, b1, MPFR_RNDN)
                    mpfr_mul_2ui(tmp, tmp, 1, MPFR_RNDN)
                    mpfr_sub(tmp, tmp, b2, MPFR_RNDN)
                    mpfr_add_d(tmp, tmp, c[j], MPFR_RNDN)
                    mpfr_add_d(tmp, tmp, clo[j], MPFR_RNDN)
                    mpfr_set(b2, b1, MPFR_RNDN)
                    mpfr_set(b1, tmp, MPFR_RNDN)
                mpfr_mul(val, y, b1, MPFR_RNDN)
                mpfr_sub(val, val, b2, MPFR_RNDN)
                mpfr_add_d(val, val, c[0], MPFR_RNDN)
                mpfr_add_d(val, val, clo[0], MPFR_RNDN)
                mpfr_mul(acc, acc, val, MPFR_RNDN)
            r = mpfr_get_d(acc, MPFR_RNDN)
            o[i] = r
            if r == r and (r > 1.7976931348623157e308 or r < -1.7976931348623157e308):
                over[i] = True
    finally:
        mpfr_clear(y)
        mpfr_clear(b1)
        mpfr_clear(b2)
        mpfr_clear(tmp)
        mpfr_clear(acc)
        mpfr_clear(val)
    return out, over
