"""Pauli strings, k-local Hamiltonians and their dual interaction graphs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

#: dense realisations are refused above this many qubits (dimension 1024)
DENSE_CAP = 10
#: default limit on the size of an enumerated Pauli set
PAULI_SET_CAP = 4096

LETTERS = "IXYZ"

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# (a, b) -> (phase, letter) for the single-qubit product a*b
_TABLE = {}
for _a in LETTERS:
    _TABLE[("I", _a)] = (1, _a)
    _TABLE[(_a, "I")] = (1, _a)
    _TABLE[(_a, _a)] = (1, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _TABLE[(_a, _b)] = (1j, _c)
    _TABLE[(_b, _a)] = (-1j, _c)


class DenseCapError(ValueError):
    """Dense realisation requested above the qubit cap."""


@dataclass(frozen=True, order=False)
class PauliString:
    """Tensor product of single-qubit Paulis, qubit 0 first."""

    letters: str

    def __post_init__(self):
        if not self.letters or any(c not in LETTERS for c in self.letters):
            raise ValueError(f"bad Pauli word {self.letters!r}")

    @classmethod
    def from_sparse(cls, n: int, ops: dict) -> "PauliString":
        """``PauliString.from_sparse(4, {0: 'Z', 1: 'Z'})`` is Z Z I I."""
        w = ["I"] * n
        for q, c in ops.items():
            w[q] = c
        return cls("".join(w))

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> frozenset:
        return frozenset(i for i, c in enumerate(self.letters) if c != "I")

    @property
    def weight(self) -> int:
        return len(self.support)

    def sort_key(self):
        # weight first, then words with I < X < Y < Z
        return (self.weight, self.letters)

    def to_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        return _dense_word(self.letters, cap)

    def __str__(self):
        return self.letters


@lru_cache(maxsize=4096)
def _dense_word(letters: str, cap: int) -> np.ndarray:
    if len(letters) > cap:
        raise DenseCapError(f"{len(letters)} qubits exceeds the dense cap of {cap}")
    out = np.ones((1, 1), dtype=complex)
    for c in letters:
        out = np.kron(out, _SINGLE[c])
    out.setflags(write=False)
    return out


def pauli_mul(P: PauliString, Q: PauliString):
    """Return (phase, R) with P Q = phase * R, phase in {1, i, -1, -i}."""
    if P.n != Q.n:
        raise ValueError("Pauli strings act on different numbers of qubits")
    phase = 1
    out = []
    for a, b in zip(P.letters, Q.letters):
        ph, c = _TABLE[(a, b)]
        phase *= ph
        out.append(c)
    return phase, PauliString("".join(out))


def commutes(P: PauliString, Q: PauliString) -> bool:
    anti = sum(1 for a, b in zip(P.letters, Q.letters) if a != "I" and b != "I" and a != b)
    return anti % 2 == 0


@dataclass(frozen=True)
class LocalHamiltonian:
    """H = sum_a couplings[a] * terms[a] with |coupling| <= 1."""

    terms: tuple
    couplings: tuple
    locality: int | None = None

    def __post_init__(self):
        terms = tuple(self.terms)
        lam = tuple(float(c) for c in self.couplings)
        if len(terms) != len(lam):
            raise ValueError("terms and couplings differ in length")
        if terms and len({t.n for t in terms}) != 1:
            raise ValueError("terms act on different numbers of qubits")
        if any(abs(c) > 1 for c in lam):
            raise ValueError("couplings must lie in [-1, 1]")
        k = self.locality
        if k is None:
            k = max((t.weight for t in terms), default=0)
        if any(t.weight > k for t in terms):
            raise ValueError(f"a term acts on more than {k} qubits")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "couplings", lam)
        object.__setattr__(self, "locality", k)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def n(self) -> int:
        return self.terms[0].n

    def with_couplings(self, lam) -> "LocalHamiltonian":
        return LocalHamiltonian(self.terms, tuple(lam), self.locality)

    def to_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        return to_dense(self, cap)


def to_dense(obj, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense matrix of a PauliString or a LocalHamiltonian."""
    if isinstance(obj, PauliString):
        return obj.to_dense(cap)
    mats = term_matrices(obj, cap)
    return np.tensordot(np.asarray(obj.couplings), mats, axes=1)


def term_matrices(H: LocalHamiltonian, cap: int = DENSE_CAP) -> np.ndarray:
    """Stack of dense term matrices, shape (m, 2^n, 2^n)."""
    if H.n > cap:
        raise DenseCapError(f"{H.n} qubits exceeds the dense cap of {cap}")
    return np.stack([t.to_dense(cap) for t in H.terms])


@dataclass(frozen=True)
class InteractionGraph:
    """Terms a != b are adjacent when their supports intersect (0-based indices)."""

    adjacency: dict = field(default_factory=dict)

    @property
    def max_degree(self) -> int:
        return max((len(v) for v in self.adjacency.values()), default=0)

    def edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a, nb in self.adjacency.items() for b in nb if a < b)


def interaction_graph(H: LocalHamiltonian) -> InteractionGraph:
    sup = [t.support for t in H.terms]
    adj = {a: frozenset(b for b in range(H.m) if b != a and sup[a] & sup[b])
           for a in range(H.m)}
    return InteractionGraph(adj)


class PauliSet(list):
    """List of PauliStrings that remembers whether enumeration was cut short."""

    truncated: bool = False
    full_size: int = 0


def _words_on(n: int, support) -> list[PauliString]:
    support = sorted(support)
    out = []
    for combo in itertools.product("XYZ", repeat=len(support)):
        w = ["I"] * n
        for q, c in zip(support, combo):
            w[q] = c
        out.append(PauliString("".join(w)))
    return out


def pauli_set_klG(H: LocalHamiltonian, l: int, cap: int = PAULI_SET_CAP,
                  allow_truncation: bool = False) -> PauliSet:
    """Non-identity Paulis supported inside the union of some l term supports.

    Strings are ordered by (weight, word).  When the set would exceed ``cap``
    it is truncated to the first ``cap`` strings if ``allow_truncation``,
    otherwise a ValueError is raised.
    """
    if l < 1:
        raise ValueError("l must be at least 1")
    sups = [t.support for t in H.terms]
    unions = {frozenset().union(*S) for S in itertools.combinations(sups, min(l, len(sups)))}
    # every subset of a union is itself admissible; enumerate exact supports once
    supports = set()
    for U in unions:
        for r in range(1, len(U) + 1):
            supports.update(frozenset(c) for c in itertools.combinations(sorted(U), r))
    size = sum(3 ** len(s) for s in supports)
    if size > cap and not allow_truncation:
        raise ValueError(f"Pauli set has {size} strings, above the cap of {cap}")
    strings = sorted((p for s in supports for p in _words_on(H.n, s)),
                     key=PauliString.sort_key)
    out = PauliSet(strings[:cap])
    out.truncated = size > cap
    out.full_size = size
    return out
