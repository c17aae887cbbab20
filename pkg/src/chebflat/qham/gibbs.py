"""Exact Gibbs states and a seeded stand-in for trace estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import DENSE_CAP, LocalHamiltonian, to_dense


def gibbs_state(H, beta: float, cap: int = DENSE_CAP) -> np.ndarray:
    """rho = exp(-beta H) / Tr exp(-beta H) through an eigendecomposition.

    ``H`` may be a LocalHamiltonian or a Hermitian matrix.  Exponents are
    shifted by their maximum before exponentiating.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    M = to_dense(H, cap) if isinstance(H, LocalHamiltonian) else np.asarray(H, dtype=complex)
    w, V = np.linalg.eigh(M)
    e = -beta * w
    p = np.exp(e - e.max())
    p /= p.sum()
    rho = (V * p) @ V.conj().T
    return 0.5 * (rho + rho.conj().T)


def density_defects(rho: np.ndarray) -> dict:
    """Hermiticity gap, smallest eigenvalue and trace error of a density matrix."""
    return {
        "hermitian_gap": float(np.abs(rho - rho.conj().T).max()),
        "min_eig": float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()),
        "trace_err": float(abs(np.trace(rho) - 1)),
    }


@dataclass(frozen=True)
class TraceEstimator:
    """``mode`` is "exact" or "shot-noise"; noise has std 1/sqrt(samples) per part."""

    mode: str = "exact"
    samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "shot-noise"):
            raise ValueError(f"unknown trace mode {self.mode!r}")
        if self.mode == "shot-noise" and self.samples <= 0:
            raise ValueError("shot-noise mode needs a positive sample count")

    def noise(self, key: int = 0) -> complex:
        """The seeded noise term for measurement number ``key`` (0 in exact mode)."""
        if self.mode == "exact":
            return 0j
        rng = np.random.default_rng([self.seed, key])
        re, im = rng.standard_normal(2) / np.sqrt(self.samples)
        return complex(re, im)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "samples": self.samples, "seed": self.seed}


def trace_est(est: TraceEstimator, M: np.ndarray, rho: np.ndarray, key: int = 0) -> complex:
    """Tr(M rho), plus seeded Gaussian noise in shot-noise mode."""
    M = np.asarray(M)
    if M.shape != rho.shape:
        raise ValueError("matrix and state dimensions differ")
    return complex(np.einsum("ij,ji->", M, rho)) + est.noise(key)
