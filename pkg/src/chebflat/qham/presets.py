"""Small named instances used by the CLI and the acceptance tests."""

from __future__ import annotations

from ..flatexp import build_flat, choose_flat_params
from .gibbs import TraceEstimator
from .pauli import LocalHamiltonian, PauliString, pauli_set_klG
from .pop import EXPANSION_CAP, PAIR_CAP, assemble_pop, flat_requirement


def _ring(n, letter_pair):
    return [PauliString.from_sparse(n, {i: letter_pair[0], (i + 1) % n: letter_pair[1]})
            for i in range(n)]


def _single():
    return LocalHamiltonian([PauliString("Z")], [0.7])


def _zz_chain_4():
    # periodic chain, so four bonds on four qubits
    return LocalHamiltonian(_ring(4, "ZZ"), [0.8, -0.45, 0.3, 0.6])


def _tfim_4():
    fields = [PauliString.from_sparse(4, {i: "X"}) for i in range(4)]
    return LocalHamiltonian(_ring(4, "ZZ") + fields,
                            [0.7, -0.5, 0.4, 0.6, 0.3, -0.2, 0.5, 0.25])


PRESETS = {
    "single-qubit": {"H": _single, "beta": 1.0},
    "zz-chain-4": {"H": _zz_chain_4, "beta": 0.5},
    "tfim-4": {"H": _tfim_4, "beta": 0.5},
}

DEFAULTS = {
    "eps": 0.01,
    "CkG": 1.0,
    "flat_eps": 5e-4,
    "flat_eta": 0.5,
    "set_l": 1,
    "A_size": 12,
    "B_size": 48,
    "pair_cap": PAIR_CAP,
    "expansion_cap": EXPANSION_CAP,
}


def _head(full, size):
    """First ``size`` strings in (weight, word) order; truncation is remembered."""
    sel = type(full)(full[:size])
    sel.truncated = full.truncated or len(full) > size
    sel.full_size = full.full_size
    return sel


def preset_hamiltonian(name: str) -> LocalHamiltonian:
    try:
        return PRESETS[name]["H"]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def preset_flat(H: LocalHamiltonian, beta: float, eps: float, CkG: float,
                flat_eps: float, flat_eta: float):
    """Q accurate on [-2 beta m, 2 beta m], which holds the spectrum of ad(-beta H_hat)
    for every H_hat in the box; accuracy tightened to the required delta if needed."""
    req = flat_requirement(CkG, beta, eps)
    t = 2.0 * beta * H.m
    return build_flat(choose_flat_params(min(flat_eps, req["delta"]), flat_eta, t))


def build_preset(name: str, beta: float | None = None, *, trace: str = "exact",
                 samples: int = 0, seed: int = 0, override_flat: bool = False,
                 eps0_override: float | None = None, **overrides):
    """Assemble the constraint system for a preset.  Returns (pop, H_true)."""
    H = preset_hamiltonian(name)
    if beta is None:
        beta = PRESETS[name]["beta"]
    opts = dict(DEFAULTS)
    unknown = set(overrides) - set(opts)
    if unknown:
        raise ValueError(f"unknown options {sorted(unknown)}")
    opts.update({k: v for k, v in overrides.items() if v is not None})
    flat = preset_flat(H, beta, opts["eps"], opts["CkG"], opts["flat_eps"], opts["flat_eta"])
    full = pauli_set_klG(H, opts["set_l"], allow_truncation=True)
    A_set, B_set = _head(full, opts["A_size"]), _head(full, opts["B_size"])
    est = TraceEstimator(trace, samples, seed)
    pop = assemble_pop(H, beta, opts["eps"], opts["CkG"], est, flat, A_set=A_set, B_set=B_set,
                       pair_cap=opts["pair_cap"], expansion_cap=opts["expansion_cap"],
                       override_flat=override_flat, eps0_override=eps0_override)
    pop.metadata["preset"] = name
    pop.metadata["A_size"] = opts["A_size"]
    pop.metadata["B_size"] = opts["B_size"]
    pop.metadata["set_l"] = opts["set_l"]
    return pop, H
