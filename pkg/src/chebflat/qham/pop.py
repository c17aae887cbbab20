"""Polynomial constraint system for recovering couplings from a Gibbs state.

Unknowns are the couplings lam_hat in [-1, 1]^m of H_hat = sum_a lam_hat_a E_a.
Each constraint says |z(lam_hat)|^2 <= rhs^2 for a complex polynomial z:

* commutation:  z = Tr~(A1 A2 (H_hat rho - rho H_hat)),           rhs = eps0
* flat-exp:     z = Tr~(B2 Q(-beta H_hat | B1) rho) - Tr~(B1 B2 rho), rhs = eps

Constraints are stored as a list of real "parts" with LHS = sum of squares
of the parts (real and imaginary part of z), which keeps the exported
polynomials at degree deg(z) rather than 2 deg(z).  The ball constraint
sum lam_a^2 <= R^2 fits the same form with the parts being the variables.

Two evaluation paths exist: dense matrices (always available on a freshly
assembled instance) and the sparse monomial form (available unless the
expansion was too large, and the only path on imported instances).
"""

from __future__ import annotations

import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb

import numpy as np
from scipy.optimize import least_squares

from .. import __version__
from ..flatexp import FlatApprox, expand_flat
from .comm import flat_comm_apply
from .gibbs import TraceEstimator, trace_est
from .pauli import LocalHamiltonian, PauliString, term_matrices

SCHEMA = "chebflat.pop/1"
#: largest number of monomials a single flat-exp expansion may produce
EXPANSION_CAP = 20000
#: default limit on the number of ordered pairs taken from each Pauli set
PAIR_CAP = 4096

KINDS = ("commutation", "flat-exp", "ball")


class ResidualOnlyError(ValueError):
    """The instance has no symbolic form to export."""


@dataclass(frozen=True)
class SparsePoly:
    """Real polynomial in m variables: terms are (exponent tuple, coefficient)."""

    m: int
    terms: tuple = ()

    def __post_init__(self):
        for e, _ in self.terms:
            if len(e) != self.m:
                raise ValueError("exponent vector length differs from m")

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def _arrays(self):
        E = np.array([e for e, _ in self.terms], dtype=np.int64).reshape(-1, self.m)
        C = np.array([float(c) for _, c in self.terms], dtype=np.float64)
        return E, C

    def __call__(self, lam):
        if any(isinstance(c, Fraction) for _, c in self.terms) or \
                any(isinstance(v, Fraction) for v in np.atleast_1d(lam)):
            lam = [Fraction(v) for v in lam]
            total = Fraction(0)
            for e, c in self.terms:
                term = Fraction(c)
                for v, k in zip(lam, e):
                    term *= v ** k
                total += term
            return total
        E, C = self._arrays()
        if not len(C):
            return 0.0
        lam = np.asarray(lam, dtype=np.float64)
        return float(C @ np.prod(lam[None, :] ** E, axis=1))


@dataclass(frozen=True)
class Constraint:
    kind: str
    rhs: float
    label: str
    parts: tuple | None = None

    def lhs(self, lam):
        return sum(p(lam) ** 2 for p in self.parts)


@dataclass
class _NumericContext:
    """Everything the dense path needs; never exported."""

    terms: np.ndarray
    rho: np.ndarray
    beta: float
    flat: FlatApprox
    comm_ops: np.ndarray         # A1 A2 for each commutation pair
    comm_offsets: np.ndarray
    B1: np.ndarray               # distinct B1 matrices
    B2: np.ndarray               # distinct B2 matrices
    flat_pairs: np.ndarray       # (i1, i2) per flat-exp constraint
    flat_const: np.ndarray       # measured Tr~(B1 B2 rho) per constraint
    flat_offsets: np.ndarray


@dataclass
class PopInstance:
    m: int
    constraints: tuple
    metadata: dict = field(default_factory=dict)
    ball_radius: float | None = None
    residual_only: bool = False
    box: tuple = (-1.0, 1.0)
    _ctx: _NumericContext | None = field(default=None, repr=False, compare=False)

    def bounds(self) -> np.ndarray:
        """Right-hand sides of the LHS <= bound comparisons (rhs squared)."""
        return np.array([c.rhs ** 2 for c in self.constraints])

    def kinds(self) -> list[str]:
        return [c.kind for c in self.constraints]

    @property
    def monomial_count(self) -> int:
        if self.residual_only:
            return 0
        return sum(len(p.terms) for c in self.constraints for p in c.parts)


# ---------------------------------------------------------------------------
# assembly

def flat_requirement(CkG: float, beta: float, eps: float) -> dict:
    """Accuracy, flatness slack and interval demanded of Q, read in that order."""
    return {
        "delta": 1e-4 * 2.0 ** (CkG * beta) * math.log(1.0 / eps),
        "eta": 5.0 / (CkG * beta),
        "t": 1e-4 * eps,
    }


def meets_flat_requirement(flat: FlatApprox, req: dict) -> bool:
    p = flat.params
    return p.eps <= req["delta"] and p.eta <= req["eta"] and p.t >= req["t"]


def eps0_value(eps: float, CkG: float, beta: float, m: int, override: float | None = None):
    """eps^(10^(C beta)) / m^3, flushed to the smallest positive double on underflow.

    Returns (value, info dict for the metadata).
    """
    log_val = 10.0 ** (CkG * beta) * math.log(eps) - 3.0 * math.log(m)
    formula = math.exp(log_val) if log_val > -745.2 else 0.0
    info = {"eps0_log": log_val, "eps0_formula": formula, "eps0_flushed": False,
            "eps0_overridden": override is not None}
    if override is not None:
        return float(override), info
    if formula == 0.0:
        info["eps0_flushed"] = True
        return float(np.nextafter(0.0, 1.0)), info
    return formula, info


def _pairs(items, cap):
    pairs = [(i, j) for i in range(len(items)) for j in range(len(items))]
    return pairs[:cap], len(pairs) > cap


def assemble_pop(H_true: LocalHamiltonian, beta: float, eps: float, CkG: float,
                 est: TraceEstimator, flat: FlatApprox, *, A_set, B_set,
                 rho: np.ndarray | None = None, pair_cap: int = PAIR_CAP,
                 expansion_cap: int = EXPANSION_CAP, override_flat: bool = False,
                 eps0_override: float | None = None) -> PopInstance:
    """Build the constraint system from the Gibbs state of ``H_true``.

    ``A_set`` and ``B_set`` are sequences of PauliStrings (see
    :func:`pauli_set_klG`).  Ordered pairs are taken lexicographically by
    index and cut at ``pair_cap``; truncation is recorded in the metadata.
    """
    from .gibbs import gibbs_state

    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if CkG <= 0:
        raise ValueError("C(k,G) must be positive")
    req = flat_requirement(CkG, beta, eps)
    if not meets_flat_requirement(flat, req) and not override_flat:
        raise ValueError(f"flat approximation {flat.params} does not meet {req}; "
                         "pass override_flat=True to proceed")
    m = H_true.m
    eps0, eps0_info = eps0_value(eps, CkG, beta, m, eps0_override)
    if rho is None:
        rho = gibbs_state(H_true, beta)
    E = term_matrices(H_true)
    A_mats = [a.to_dense() for a in A_set]
    B_mats = [b.to_dense() for b in B_set]
    comm_pairs, comm_trunc = _pairs(A_set, pair_cap)
    flat_pairs, flat_trunc = _pairs(B_set, pair_cap)

    # constraints are numbered in order; noise key = 2*index (+1 for the Q term)
    comm_ops = np.array([A_mats[i] @ A_mats[j] for i, j in comm_pairs]).reshape(-1, *rho.shape)
    comm_offsets = np.array([est.noise(2 * c) for c in range(len(comm_pairs))])
    base = len(comm_pairs)
    flat_const = np.array([trace_est(est, B_mats[i] @ B_mats[j], rho, key=2 * (base + c))
                           for c, (i, j) in enumerate(flat_pairs)])
    flat_offsets = np.array([est.noise(2 * (base + c) + 1) for c in range(len(flat_pairs))])

    _, mono = expand_flat(flat, exact=True)
    qc = [float(c) for c in mono.coeffs]
    D = len(qc) - 1
    n_mono = comb(D + m, m)
    residual_only = n_mono > expansion_cap

    constraints = []
    # commutation: z = sum_a lam_a Tr(A1 A2 [E_a, rho]) + noise
    ERho = E @ rho - rho @ E
    for c, (i, j) in enumerate(comm_pairs):
        label = f"comm[{A_set[i]},{A_set[j]}]"
        parts = None
        if not residual_only:
            coef = np.einsum("ij,aji->a", comm_ops[c], ERho)
            parts = _parts_from(m, {_unit(m, a): coef[a] for a in range(m)}, comm_offsets[c])
        constraints.append(Constraint("commutation", eps0, label, parts))

    flat_parts = None
    if not residual_only:
        flat_parts = _expand_flat_constraints(E, rho, beta, qc, np.array(B_mats), flat_pairs,
                                              flat_const, flat_offsets)
    for c, (i, j) in enumerate(flat_pairs):
        label = f"flat[{B_set[i]},{B_set[j]}]"
        constraints.append(Constraint("flat-exp", eps, label,
                                      None if flat_parts is None else flat_parts[c]))

    ctx = _NumericContext(
        terms=E, rho=rho, beta=beta, flat=flat, comm_ops=comm_ops, comm_offsets=comm_offsets,
        B1=np.array(B_mats).reshape(-1, *rho.shape), B2=np.array(B_mats).reshape(-1, *rho.shape),
        flat_pairs=np.array(flat_pairs, dtype=int).reshape(-1, 2),
        flat_const=flat_const, flat_offsets=flat_offsets)
    meta = {
        "n": H_true.n,
        "terms": [str(t) for t in H_true.terms],
        "beta": beta,
        "eps": eps,
        "eps0": eps0,
        **eps0_info,
        "CkG": CkG,
        "A_set": [str(a) for a in A_set],
        "B_set": [str(b) for b in B_set],
        "A_truncated": bool(getattr(A_set, "truncated", False)),
        "B_truncated": bool(getattr(B_set, "truncated", False)),
        "pair_cap": pair_cap,
        "comm_pairs_truncated": comm_trunc,
        "flat_pairs_truncated": flat_trunc,
        "flat": {"eps": flat.params.eps, "eta": flat.params.eta, "t": flat.params.t,
                 "k": flat.params.k, "l": flat.params.l, "degree": D},
        "flat_requirement": req,
        "flat_requirement_met": meets_flat_requirement(flat, req),
        "flat_override": bool(override_flat),
        "trace": est.to_dict(),
        "expansion_cap": expansion_cap,
        "expansion_monomials": n_mono,
    }
    pop = PopInstance(m, tuple(constraints), meta, None, residual_only, (-1.0, 1.0), ctx)
    pop.metadata["monomial_count"] = pop.monomial_count
    return pop


def _unit(m, a):
    e = [0] * m
    e[a] = 1
    return tuple(e)


def _parts_from(m: int, coeffs: dict, const: complex) -> tuple:
    """Real and imaginary SparsePolys from complex monomial coefficients."""
    coeffs = dict(coeffs)
    zero = (0,) * m
    coeffs[zero] = coeffs.get(zero, 0j) + const
    keys = sorted(coeffs)
    re = tuple((k, float(coeffs[k].real)) for k in keys if coeffs[k].real != 0)
    im = tuple((k, float(coeffs[k].imag)) for k in keys if coeffs[k].imag != 0)
    return SparsePoly(m, re), SparsePoly(m, im)


def _expand_flat_constraints(E, rho, beta, qc, B, pairs, const, offsets):
    """Monomial form of every flat-exp constraint.

    For each B1 the nested commutators are grouped by the multiset of terms
    they use: W_alpha collects every word whose letter counts are alpha, and
    Q(-beta H_hat | B1) = sum_alpha qc[|alpha|] (-beta)^|alpha| lam^alpha W_alpha.
    """
    m = E.shape[0]
    by_b1 = {}
    for c, (i, j) in enumerate(pairs):
        by_b1.setdefault(i, []).append((c, j))
    out = [None] * len(pairs)
    for i, members in by_b1.items():
        js = np.array([j for _, j in members])
        B2 = B[js]
        coeffs = [dict() for _ in members]
        level_exps = [(0,) * m]
        level = B[i][None].astype(complex)
        for q, cq in enumerate(qc):
            if q > 0:
                new_exps = sorted({tuple(e[b] + (b == a) for b in range(m))
                                   for e in level_exps for a in range(m)})
                index = {e: k for k, e in enumerate(new_exps)}
                new = np.zeros((len(new_exps),) + level.shape[1:], dtype=complex)
                for a in range(m):
                    tgt = [index[tuple(e[b] + (b == a) for b in range(m))] for e in level_exps]
                    np.add.at(new, tgt, E[a] @ level - level @ E[a])
                level_exps, level = new_exps, new
            factor = cq * (-beta) ** q
            if factor == 0:
                continue
            tr = np.einsum("bij,kjl,li->bk", B2, level, rho, optimize=True) * factor
            for r in range(len(members)):
                d = coeffs[r]
                for k, e in enumerate(level_exps):
                    d[e] = tr[r, k]
        for r, (c, _) in enumerate(members):
            out[c] = _parts_from(m, coeffs[r], offsets[c] - const[c])
    return out


# ---------------------------------------------------------------------------
# evaluation

def _numeric_parts(pop: PopInstance, lam) -> np.ndarray:
    """Parts of every constraint by dense evaluation, shape (n_constraints, 2)."""
    ctx = pop._ctx
    lam = np.asarray(lam, dtype=np.float64)
    H = np.tensordot(lam, ctx.terms, axes=1)
    out = []
    if len(ctx.comm_ops):
        C = H @ ctx.rho - ctx.rho @ H
        z = np.einsum("pij,ji->p", ctx.comm_ops, C) + ctx.comm_offsets
        out.append(np.stack([z.real, z.imag], axis=1))
    if len(ctx.flat_pairs):
        Y = flat_comm_apply(ctx.flat, -ctx.beta * H, ctx.B1)
        W = Y @ ctx.rho
        T = np.einsum("bij,aji->ab", ctx.B2, W)
        z = T[ctx.flat_pairs[:, 0], ctx.flat_pairs[:, 1]] - ctx.flat_const + ctx.flat_offsets
        out.append(np.stack([z.real, z.imag], axis=1))
    return np.concatenate(out) if out else np.zeros((0, 2))


def residuals(pop: PopInstance, lam, path: str = "auto") -> np.ndarray:
    """LHS value of every constraint at lam_hat = lam.

    ``path`` is "numeric" (dense matrices), "symbolic" (sparse monomials)
    or "auto" (numeric when the instance still carries its matrices).
    """
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (pop.m,):
        raise ValueError(f"expected {pop.m} couplings")
    if np.any(np.abs(lam) > 1):
        raise ValueError("couplings must lie in [-1, 1]")
    if path == "auto":
        path = "numeric" if pop._ctx is not None else "symbolic"
    if path == "symbolic":
        if pop.residual_only:
            raise ResidualOnlyError("instance has no symbolic form")
        return np.array([c.lhs(lam) for c in pop.constraints], dtype=np.float64)
    if path != "numeric":
        raise ValueError(f"unknown path {path!r}")
    if pop._ctx is None:
        raise ValueError("instance carries no matrices (imported?); use the symbolic path")
    parts = _numeric_parts(pop, lam)
    lhs = list((parts ** 2).sum(axis=1))
    for c in pop.constraints[len(parts):]:
        lhs.append(float(np.sum(lam ** 2)) if c.kind == "ball" else c.lhs(lam))
    return np.array(lhs)


def residual_report(pop: PopInstance, lam, path: str = "auto") -> dict:
    r = residuals(pop, lam, path)
    b = pop.bounds()
    ok = r <= b
    return {
        "lhs": r.tolist(),
        "bound": b.tolist(),
        "kinds": pop.kinds(),
        "pass": ok.tolist(),
        "all_pass": bool(ok.all()),
        "max_ratio": float(np.max(r / b)) if len(r) else 0.0,
    }


def max_violation(pop: PopInstance, lam, path: str = "auto") -> float:
    """max_c (LHS_c - rhs_c^2) / rhs_c^2; non-positive means feasible."""
    r = residuals(pop, lam, path)
    if not len(r):
        return -1.0
    b = pop.bounds()
    return float(np.max(r / b - 1.0))


# ---------------------------------------------------------------------------
# learning

def _scaled_parts_fn(pop: PopInstance):
    keep = [k for k, c in enumerate(pop.constraints) if c.kind != "ball"]
    rhs = np.array([pop.constraints[k].rhs for k in keep])
    if pop._ctx is not None:
        def fn(lam):
            return (_numeric_parts(pop, lam) / rhs[:, None]).ravel()
    else:
        cons = [pop.constraints[k] for k in keep]

        def fn(lam):
            return np.array([p(lam) / c.rhs for c in cons for p in c.parts])
    return fn


def learn(pop: PopInstance, starts: int = 8, max_iters: int = 200, seed: int = 0,
          threads: int = 1):
    """Multi-start bounded least squares on the scaled constraint parts.

    Each start minimises sum (part / rhs)^2 over the box; the candidate with
    the smallest max relative violation wins.  Deterministic for a given
    seed: start points come from one generator and results are reduced in
    start order.
    """
    fn = _scaled_parts_fn(pop)
    rng = np.random.default_rng(seed)
    x0s = rng.uniform(-1.0, 1.0, size=(starts, pop.m))
    t0 = time.perf_counter()

    def run(x0):
        traj = []
        best = [math.inf]

        def wrapped(lam):
            v = fn(lam)
            s = float(v @ v)
            if s < best[0]:
                best[0] = s
                traj.append(s)
            return v

        res = least_squares(wrapped, x0, bounds=(-1.0, 1.0), max_nfev=max_iters,
                            xtol=1e-14, ftol=1e-14, gtol=1e-14, method="trf")
        lam = np.clip(res.x, -1.0, 1.0)
        return {"x0": x0.tolist(), "lam": lam.tolist(), "nfev": int(res.nfev),
                "objective": max_violation(pop, lam), "trajectory": traj}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            runs = list(ex.map(run, x0s))
    else:
        runs = [run(x) for x in x0s]
    best = min(range(starts), key=lambda k: (runs[k]["objective"], k))
    report = {
        "best_start": best,
        "objective": runs[best]["objective"],
        "feasible": runs[best]["objective"] <= 0.0,
        "starts": runs,
        "seed": seed,
        "wall_time": time.perf_counter() - t0,
    }
    return np.array(runs[best]["lam"]), report


# ---------------------------------------------------------------------------
# ball constraint and export

def add_ball_constraint(pop: PopInstance, R: float | None = None) -> PopInstance:
    """Append sum lam_a^2 <= R^2 (R = sqrt(m) when None)."""
    if R is None:
        R = math.sqrt(pop.m)
    R = float(R)
    if R < math.sqrt(pop.m):
        warnings.warn(f"ball radius {R} < sqrt(m) = {math.sqrt(pop.m)} may cut the box")
    parts = tuple(SparsePoly(pop.m, ((_unit(pop.m, a), 1),)) for a in range(pop.m))
    c = Constraint("ball", R, "ball", parts)
    meta = dict(pop.metadata, ball_radius=R)
    new = replace(pop, constraints=pop.constraints + (c,), metadata=meta, ball_radius=R)
    if not pop.residual_only:
        new.metadata["monomial_count"] = new.monomial_count
    return new


def _enc(c):
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    if isinstance(c, (int, np.integer)):
        return int(c)
    return float(c)


def _dec(c):
    if isinstance(c, str):
        return Fraction(c)
    return c


def pop_to_dict(pop: PopInstance, config: dict | None = None) -> dict:
    if pop.residual_only:
        raise ResidualOnlyError("residual-only instance cannot be exported symbolically")
    cons = []
    for c in pop.constraints:
        cons.append({
            "kind": c.kind,
            "label": c.label,
            "rhs": c.rhs,
            "parts": [[{"exponents": list(e), "coefficient": _enc(v)} for e, v in p.terms]
                      for p in c.parts],
        })
    return {
        "schema": SCHEMA,
        "version": __version__,
        "config": config or {},
        "m": pop.m,
        "variables": [f"lam_{a}" for a in range(pop.m)],
        "box": list(pop.box),
        "ball_radius": pop.ball_radius,
        "metadata": pop.metadata,
        "constraints": cons,
    }


def export_pop(pop: PopInstance, destination, config: dict | None = None) -> None:
    text = json.dumps(pop_to_dict(pop, config), indent=1, sort_keys=True)
    with open(destination, "w") as fh:
        fh.write(text + "\n")


def pop_from_dict(d: dict) -> PopInstance:
    if d.get("schema") != SCHEMA:
        raise ValueError(f"unsupported schema {d.get('schema')!r}")
    m = d["m"]
    cons = []
    for c in d["constraints"]:
        if c["kind"] not in KINDS:
            raise ValueError(f"unknown constraint kind {c['kind']!r}")
        parts = tuple(SparsePoly(m, tuple((tuple(t["exponents"]), _dec(t["coefficient"]))
                                          for t in p)) for p in c["parts"])
        cons.append(Constraint(c["kind"], c["rhs"], c["label"], parts))
    return PopInstance(m, tuple(cons), d["metadata"], d["ball_radius"], False, tuple(d["box"]))


def import_pop(source) -> PopInstance:
    with open(source) as fh:
        return pop_from_dict(json.load(fh))
