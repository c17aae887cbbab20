"""Timing of the compiled kernels against the pure-Python fallback."""

from __future__ import annotations

import time

import numpy as np

from ._backend import compiled_kernels, python_kernels
from .flatexp import build_flat, choose_flat_params


def _best(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(seed):
    rng = np.random.default_rng(seed)
    q = build_flat(choose_flat_params(1e-3, 0.25, 1.0))
    fs = [np.ascontiguousarray(f.coeffs) for f in q.factors]
    los = [np.ascontiguousarray(f.low_parts()) for f in q.factors]
    scale = q.factors[0].scale
    a = rng.standard_normal(200)
    b = rng.standard_normal(200)
    y = np.linspace(-1, 1, 20001)
    x = np.linspace(-50.0, -1.0, 50)
    return {
        "clenshaw[n=200, pts=20001]": lambda k: k.clenshaw(a, y),
        "cheb_mul[200x200]": lambda k: k.cheb_mul(a, b),
        f"product_eval_ext[deg={q.degree()}, pts=50]":
            lambda k: k.product_eval_ext(fs, los, x, scale, 256),
    }


def run_benchmark(repeats: int = 3, seed: int = 0) -> list[dict]:
    """One row per kernel: best-of-``repeats`` seconds for each backend."""
    rows = []
    for name, call in _cases(seed).items():
        row = {"kernel": name, "python_s": _best(lambda: call(python_kernels), repeats)}
        if compiled_kernels is not None:
            row["compiled_s"] = _best(lambda: call(compiled_kernels), repeats)
            row["speedup"] = row["python_s"] / row["compiled_s"]
        else:
            row["compiled_s"] = None
            row["speedup"] = None
        rows.append(row)
    return rows


def format_rows(rows) -> str:
    lines = [f"{'kernel':45s} {'python [s]':>12s} {'compiled [s]':>13s} {'speedup':>9s}"]
    for r in rows:
        c = "n/a" if r["compiled_s"] is None else f"{r['compiled_s']:.5f}"
        s = "n/a" if r["speedup"] is None else f"{r['speedup']:.1f}x"
        lines.append(f"{r['kernel']:45s} {r['python_s']:12.5f} {c:>13s} {s:>9s}")
    return "\n".join(lines)
