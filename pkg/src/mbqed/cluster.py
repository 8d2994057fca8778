"""Resource states and the lab/box frame relation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .statevec import (
    H,
    KET_0,
    KET_1,
    KET_MINUS,
    KET_PLUS,
    StateVector,
    DimensionError,
    apply_cz,
    apply_single,
    apply_swap,
    check_unitary,
    make_state,
    product_state,
)

SQUARE_EDGES = frozenset({(1, 2), (1, 3), (2, 4), (3, 4)})


@dataclass(frozen=True)
class GraphSpec:
    num_qubits: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        clean = set()
        for edge in self.edges:
            a, b = (int(v) for v in edge)
            if a == b:
                raise ValueError(f"self-loop on qubit {a}")
            for v in (a, b):
                if not 1 <= v <= self.num_qubits:
                    raise ValueError(f"edge {edge} references qubit {v} outside 1..{self.num_qubits}")
            clean.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(clean))

    @classmethod
    def parse(cls, text: str, num_qubits: int | None = None) -> "GraphSpec":
        """Parse an edge list like ``"1-2,1-3,2-4,3-4"``."""
        edges = []
        for tok in filter(None, (t.strip() for t in text.split(","))):
            a, sep, b = tok.partition("-")
            if not sep:
                raise ValueError(f"bad edge {tok!r}, expected 'i-j'")
            edges.append((int(a), int(b)))
        n = num_qubits or max((max(e) for e in edges), default=1)
        return cls(n, frozenset(edges))


SQUARE_GRAPH = GraphSpec(4, SQUARE_EDGES)


def graph_state(spec: GraphSpec) -> StateVector:
    """CZ on every edge of |+>^n."""
    state = product_state(*([KET_PLUS] * spec.num_qubits))
    for i, j in sorted(spec.edges):
        state = apply_cz(state, i, j)
    return state


def box_cluster() -> StateVector:
    """The four-qubit box cluster written out term by term."""
    terms = [
        (KET_0, KET_PLUS, KET_PLUS, KET_0),
        (KET_0, KET_MINUS, KET_MINUS, KET_1),
        (KET_1, KET_MINUS, KET_MINUS, KET_0),
        (KET_1, KET_PLUS, KET_PLUS, KET_1),
    ]
    amps = sum(product_state(*t).amplitudes for t in terms) / 2
    return make_state(4, amps)


def lab_cluster() -> StateVector:
    """The cluster as produced in the lab: (|0000>+|0011>+|1100>-|1111>)/2."""
    amps = np.zeros(16, dtype=complex)
    amps[0b0000] = amps[0b0011] = amps[0b1100] = 0.5
    amps[0b1111] = -0.5
    return make_state(4, amps)


@dataclass(frozen=True, eq=False)
class FrameMap:
    """Lab -> box relabeling: a qubit permutation followed by local unitaries.

    ``swap`` is applied first, then ``local[k]`` on qubit ``k + 1``.
    """

    swap: tuple[int, int] = (2, 4)
    local: tuple = (H, H, H, H)

    def __post_init__(self):
        object.__setattr__(self, "local", tuple(check_unitary(u) for u in self.local))

    def apply(self, state: StateVector) -> StateVector:
        if state.num_qubits != len(self.local):
            raise DimensionError(f"frame map expects {len(self.local)} qubits, got {state.num_qubits}")
        state = apply_swap(state, *self.swap)
        for q, u in enumerate(self.local, start=1):
            state = apply_single(state, q, u)
        return state


LAB_TO_BOX = FrameMap()


def lab_to_box(state: StateVector) -> StateVector:
    """(H x H x H x H) SWAP_24 applied to a four-qubit lab-frame state."""
    return LAB_TO_BOX.apply(state)


_BOX_TO_LAB_QUBIT = {2: 4, 3: 3}


def map_error_box_to_lab(box_qubit: int, box_unitary) -> tuple[int, np.ndarray]:
    """Where and how a box-frame error on qubit 2 or 3 is realized in the lab.

    The SWAP sends box qubit 2 to lab qubit 4; the Hadamard frame turns the
    unitary into ``H u H`` (so a box Z becomes a lab X).
    """
    if box_qubit not in _BOX_TO_LAB_QUBIT:
        raise ValueError(f"box qubit must be 2 or 3, got {box_qubit!r}")
    u = check_unitary(box_unitary)
    return _BOX_TO_LAB_QUBIT[box_qubit], H @ u @ H


def map_error_lab_to_box(lab_qubit: int, lab_unitary) -> tuple[int, np.ndarray]:
    inverse = {v: k for k, v in _BOX_TO_LAB_QUBIT.items()}
    if lab_qubit not in inverse:
        raise ValueError(f"lab qubit must be 3 or 4, got {lab_qubit!r}")
    u = check_unitary(lab_unitary)
    return inverse[lab_qubit], H @ u @ H


def reduced_single_qubit(state: StateVector, qubit: int) -> np.ndarray:
    """Single-qubit reduced density matrix by explicit partial trace."""
    t = np.moveaxis(state.tensor(), qubit - 1, 0).reshape(2, -1)
    return t @ t.conj().T


__all__ = [
    "GraphSpec",
    "SQUARE_GRAPH",
    "FrameMap",
    "graph_state",
    "box_cluster",
    "lab_cluster",
    "lab_to_box",
    "map_error_box_to_lab",
    "map_error_lab_to_box",
    "reduced_single_qubit",
]
