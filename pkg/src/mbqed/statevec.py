"""
Dense pure-state kernel.

Qubits are numbered from 1. Qubit 1 is the leftmost tensor factor, i.e. the
most significant bit of the amplitude index, so ``|q1 q2 ... qn>`` maps to
index ``q1 * 2**(n-1) + ... + qn``.

All values are immutable; every operation returns a new state.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import sqrt

import numpy as np

ATOL = 1e-12

_S = 1 / sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * _S
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([_S, _S], dtype=complex)
KET_MINUS = np.array([_S, -_S], dtype=complex)
KET_PLUS_I = np.array([_S, 1j * _S], dtype=complex)
KET_MINUS_I = np.array([_S, -1j * _S], dtype=complex)


class QubitIndexError(IndexError):
    pass


class DimensionError(ValueError):
    pass


class NonUnitaryError(ValueError):
    pass


class ZeroProbabilityError(ValueError):
    """Raised when a forced measurement outcome has (near) zero probability."""


def phase_rotation(theta: float) -> np.ndarray:
    """exp(-i theta Z) as a 2x2 matrix."""
    return np.array([[np.exp(-1j * theta), 0], [0, np.exp(1j * theta)]], dtype=complex)


def is_unitary(u: np.ndarray, tol: float = ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0))


def check_unitary(u, strict: bool = True, tol: float = ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 matrix, got shape {u.shape}")
    if not is_unitary(u, tol):
        if strict:
            raise NonUnitaryError("matrix is not unitary")
        warnings.warn("applying a non-unitary matrix", RuntimeWarning, stacklevel=3)
    return u


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitude vector over ``num_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if n < 1 or 2**n != amps.size:
            raise DimensionError(f"amplitude vector length {amps.size} is not 2**n with n >= 1")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape([2] * self.num_qubits)

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits}, amplitudes={np.round(self.amplitudes, 6)})"


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Two orthonormal single-qubit vectors; outcome 0 projects on ``m0``."""

    m0: np.ndarray
    m1: np.ndarray

    def __post_init__(self):
        m0 = np.asarray(self.m0, dtype=complex).reshape(-1)
        m1 = np.asarray(self.m1, dtype=complex).reshape(-1)
        if m0.shape != (2,) or m1.shape != (2,):
            raise DimensionError("basis vectors must have length 2")
        if abs(np.linalg.norm(m0) - 1) > 1e-10 or abs(np.linalg.norm(m1) - 1) > 1e-10:
            raise ValueError("basis vectors must be normalized")
        if abs(np.vdot(m0, m1)) > 1e-10:
            raise ValueError("basis vectors are not orthogonal")
        object.__setattr__(self, "m0", _frozen(m0))
        object.__setattr__(self, "m1", _frozen(m1))

    def vector(self, outcome: int) -> np.ndarray:
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
        return self.m0 if outcome == 0 else self.m1


Z_BASIS = MeasurementBasis(KET_0, KET_1)
X_BASIS = MeasurementBasis(KET_PLUS, KET_MINUS)
Y_BASIS = MeasurementBasis(KET_PLUS_I, KET_MINUS_I)


def make_state(num_qubits: int, amplitudes) -> StateVector:
    """Build a normalized state from (possibly unnormalized) amplitudes."""
    if num_qubits < 1:
        raise DimensionError("num_qubits must be positive")
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if amps.size != 2**num_qubits:
        raise DimensionError(f"expected {2**num_qubits} amplitudes, got {amps.size}")
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return StateVector(amps / norm)


def basis_state(bits: str) -> StateVector:
    """Computational basis state from a bit string such as ``"0110"``."""
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1
    return StateVector(amps)


def product_state(*kets) -> StateVector:
    out = np.array([1.0 + 0j])
    for k in kets:
        out = np.kron(out, np.asarray(k, dtype=complex))
    return make_state(len(kets), out)


def _check_index(n: int, qubit: int) -> int:
    if not isinstance(qubit, (int, np.integer)) or not 1 <= qubit <= n:
        raise QubitIndexError(f"qubit index {qubit!r} out of range 1..{n}")
    return int(qubit) - 1


def _check_pair(n: int, i: int, j: int) -> tuple[int, int]:
    a, b = _check_index(n, i), _check_index(n, j)
    if a == b:
        raise ValueError(f"two-qubit gate needs distinct qubits, got {i} twice")
    return a, b


def apply_single(state: StateVector, qubit: int, u, strict: bool = True) -> StateVector:
    """Apply a 2x2 unitary to one qubit."""
    axis = _check_index(state.num_qubits, qubit)
    u = check_unitary(u, strict)
    t = np.tensordot(u, state.tensor(), axes=([1], [axis]))
    return StateVector(np.moveaxis(t, 0, axis).reshape(-1))


def apply_cz(state: StateVector, i: int, j: int) -> StateVector:
    a, b = _check_pair(state.num_qubits, i, j)
    t = np.array(state.tensor())
    idx = [slice(None)] * state.num_qubits
    idx[a], idx[b] = 1, 1
    t[tuple(idx)] *= -1
    return StateVector(t.reshape(-1))


def apply_swap(state: StateVector, i: int, j: int) -> StateVector:
    a, b = _check_pair(state.num_qubits, i, j)
    return StateVector(np.swapaxes(state.tensor(), a, b).reshape(-1))


def outcome_probability(state: StateVector, qubit: int, projector_state) -> float:
    """Born probability of finding ``qubit`` in ``projector_state``."""
    axis = _check_index(state.num_qubits, qubit)
    m = np.asarray(projector_state, dtype=complex).reshape(-1)
    if m.shape != (2,) or abs(np.linalg.norm(m) - 1) > 1e-10:
        raise ValueError("projector state must be a normalized single-qubit vector")
    reduced = np.tensordot(m.conj(), state.tensor(), axes=([0], [axis]))
    return float(np.clip(np.sum(np.abs(reduced) ** 2), 0.0, 1.0))


def measure(
    state: StateVector,
    qubit: int,
    basis: MeasurementBasis,
    *,
    outcome: int | None = None,
    rng: np.random.Generator | None = None,
    tol: float = ATOL,
) -> tuple[int, float, StateVector | None]:
    """Projectively measure one qubit and drop it from the register.

    Pass ``outcome`` to force a branch, otherwise ``rng`` is used to sample.
    Returns ``(outcome, probability, post_state)``; the remaining qubits keep
    their order and are renumbered from 1. When the register had a single
    qubit the post state is ``None``.
    """
    axis = _check_index(state.num_qubits, qubit)
    t = state.tensor()
    branches = [np.tensordot(basis.vector(k).conj(), t, axes=([0], [axis])) for k in (0, 1)]
    probs = [float(np.sum(np.abs(b) ** 2)) for b in branches]
    if outcome is None:
        if rng is None:
            raise ValueError("either outcome or rng must be given")
        outcome = int(rng.random() >= probs[0])
    elif outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    p = probs[outcome]
    if p <= tol:
        raise ZeroProbabilityError(f"outcome {outcome} on qubit {qubit} has probability {p:.3g}")
    if state.num_qubits == 1:
        return outcome, min(p, 1.0), None
    post = branches[outcome].reshape(-1) / sqrt(p)
    return outcome, min(p, 1.0), StateVector(post)


def fidelity_pure(a: StateVector, b: StateVector) -> float:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(min(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2, 1.0))


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = ATOL) -> bool:
    return fidelity_pure(a, b) >= 1 - tol


def embed_single(u, qubit: int, n: int) -> np.ndarray:
    """Full 2**n x 2**n matrix of ``u`` acting on ``qubit``."""
    _check_index(n, qubit)
    mats = [I2] * n
    mats[qubit - 1] = np.asarray(u, dtype=complex)
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out
