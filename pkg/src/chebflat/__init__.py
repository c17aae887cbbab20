"""Flat Chebyshev-product approximations of the exponential, their
certification, and a desk-scale Hamiltonian-learning constraint system."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .chebpoly import ChebSeries, MonoPoly, OverflowFlag, cheb_T, cheb_U  # noqa: E402
from .bessel import EnclosedReal, bessel_I, check_bessel_bounds  # noqa: E402
from .flatexp import (FlatApprox, FlatParams, build_flat, choose_flat_params,  # noqa: E402
                      choose_truncation_order, verify_flat_property)
from .certify import Certificate, certify_sign  # noqa: E402

__all__ = [
    "BACKEND", "ChebSeries", "MonoPoly", "OverflowFlag", "cheb_T", "cheb_U",
    "EnclosedReal", "bessel_I", "check_bessel_bounds", "FlatApprox", "FlatParams",
    "build_flat", "choose_flat_params", "choose_truncation_order",
    "verify_flat_property", "Certificate", "certify_sign",
]
