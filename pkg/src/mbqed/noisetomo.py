"""
Mixed states, white-noise resources, wave plates, count simulation,
linear-inversion tomography and Poissonian Monte-Carlo error bars.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import reduce
from importlib import resources
from math import cos, pi, radians, sin
from typing import Callable, Iterator, Mapping

import numpy as np

from .statevec import (
    ATOL,
    I2,
    X,
    Y,
    Z,
    KET_0,
    KET_1,
    KET_MINUS,
    KET_MINUS_I,
    KET_PLUS,
    KET_PLUS_I,
    DimensionError,
    MeasurementBasis,
    StateVector,
    ZeroProbabilityError,
    _check_index,
    check_unitary,
)

PHYS_TOL = 1e-10

# measurement setting label -> columns are the outcome-0 / outcome-1 kets
SETTING_BASES = {
    "X": np.column_stack([KET_PLUS, KET_MINUS]),
    "Y": np.column_stack([KET_PLUS_I, KET_MINUS_I]),
    "Z": np.column_stack([KET_0, KET_1]),
}
_PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite 2**n x 2**n matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {m.shape}")
        n = m.shape[0].bit_length() - 1
        if n < 1 or 2**n != m.shape[0]:
            raise DimensionError(f"dimension {m.shape[0]} is not 2**n")
        if not np.allclose(m, m.conj().T, atol=PHYS_TOL, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > PHYS_TOL:
            raise ValueError(f"density matrix trace {np.trace(m).real:.12g} != 1")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -PHYS_TOL:
            raise ValueError("density matrix has negative eigenvalues")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def num_qubits(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def tensor(self) -> np.ndarray:
        n = self.num_qubits
        return self.matrix.reshape([2] * (2 * n))


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std >= 0:
            raise ValueError("std must be non-negative")

    def __str__(self):
        return f"{self.mean:.3f} ± {self.std:.3f}"


def to_density(state: StateVector) -> DensityMatrix:
    v = state.amplitudes
    return DensityMatrix(np.outer(v, v.conj()))


def maximally_mixed(num_qubits: int) -> DensityMatrix:
    d = 2**num_qubits
    return DensityMatrix(np.eye(d, dtype=complex) / d)


def mix_white_noise(rho: DensityMatrix, p: float) -> DensityMatrix:
    """p * rho + (1 - p) * I / 2**n."""
    if not 0 <= p <= 1:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {p}")
    d = rho.dim
    return DensityMatrix(p * rho.matrix + (1 - p) * np.eye(d) / d)


def white_noise_parameter(fidelity: float, num_qubits: int = 4) -> float:
    """Mixing parameter p giving fidelity F = p + (1 - p) / 2**n to the pure target."""
    d = 2**num_qubits
    if not 1 / d <= fidelity <= 1:
        raise ValueError(f"fidelity must lie in [1/{d}, 1], got {fidelity}")
    return (fidelity - 1 / d) / (1 - 1 / d)


def dephase(rho: DensityMatrix, qubit: int, p: float) -> DensityMatrix:
    """Single-qubit phase-flip channel: (1 - p) rho + p Z rho Z."""
    if not 0 <= p <= 1:
        raise ValueError(f"dephasing probability must lie in [0, 1], got {p}")
    zr = apply_unitary(rho, qubit, Z)
    return DensityMatrix((1 - p) * rho.matrix + p * zr.matrix)


def fidelity_mixed(rho: DensityMatrix, psi: StateVector) -> float:
    """<psi|rho|psi>."""
    if rho.dim != psi.dim:
        raise DimensionError(f"dimension mismatch: {rho.dim} vs {psi.dim}")
    v = psi.amplitudes
    return float(np.clip(np.real(v.conj() @ rho.matrix @ v), 0.0, 1.0))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a.matrix - b.matrix)).sum())


def bloch_vector(rho: DensityMatrix) -> tuple[float, float, float]:
    if rho.num_qubits != 1:
        raise DimensionError(f"Bloch vector needs a single qubit, got {rho.num_qubits}")
    m = rho.matrix
    return tuple(float(np.real(np.trace(m @ p))) for p in (X, Y, Z))


# -- mixed-state kernels ----------------------------------------------------


def apply_unitary(rho: DensityMatrix, qubit: int, u, strict: bool = True) -> DensityMatrix:
    """u rho u^dagger on one qubit."""
    n = rho.num_qubits
    axis = _check_index(n, qubit)
    u = check_unitary(u, strict)
    t = rho.tensor()
    t = np.moveaxis(np.tensordot(u, t, axes=([1], [axis])), 0, axis)
    t = np.moveaxis(np.tensordot(u.conj(), t, axes=([1], [n + axis])), 0, n + axis)
    return DensityMatrix(t.reshape(rho.dim, rho.dim))


def _project_out(rho: DensityMatrix, axis: int, m: np.ndarray) -> np.ndarray:
    n = rho.num_qubits
    t = np.tensordot(m.conj(), rho.tensor(), axes=([0], [axis]))
    # the bra index has shifted down by one after contracting the ket axis
    t = np.tensordot(m, t, axes=([0], [n - 1 + axis]))
    d = rho.dim // 2
    return t.reshape(d, d)


def measure_density(
    rho: DensityMatrix,
    qubit: int,
    basis: MeasurementBasis,
    *,
    outcome: int | None = None,
    rng: np.random.Generator | None = None,
    tol: float = ATOL,
) -> tuple[int, float, DensityMatrix | None]:
    """Mixed-state counterpart of :func:`mbqed.statevec.measure`."""
    axis = _check_index(rho.num_qubits, qubit)
    blocks = [_project_out(rho, axis, basis.vector(k)) for k in (0, 1)]
    probs = [float(np.real(np.trace(b))) for b in blocks]
    if outcome is None:
        if rng is None:
            raise ValueError("either outcome or rng must be given")
        outcome = int(rng.random() >= probs[0])
    elif outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    p = probs[outcome]
    if p <= tol:
        raise ZeroProbabilityError(f"outcome {outcome} on qubit {qubit} has probability {p:.3g}")
    if rho.num_qubits == 1:
        return outcome, min(p, 1.0), None
    post = blocks[outcome] / p
    return outcome, min(p, 1.0), DensityMatrix((post + post.conj().T) / 2)


def partial_trace_keep(rho: DensityMatrix, keep: list[int]) -> DensityMatrix:
    """Reduced state on the (1-based) qubits in ``keep``."""
    n = rho.num_qubits
    keep_axes = [_check_index(n, q) for q in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    ket = list(letters[:n])
    bra = list(letters[n : 2 * n])
    for ax in range(n):
        if ax not in keep_axes:
            bra[ax] = ket[ax]
    out = "".join(ket[a] for a in keep_axes) + "".join(bra[a] for a in keep_axes)
    m = np.einsum("".join(ket) + "".join(bra) + "->" + out, rho.tensor())
    d = 2 ** len(keep_axes)
    return DensityMatrix(m.reshape(d, d))


# -- wave plates --------------------------------------------------------------


def _rotation(theta: float) -> np.ndarray:
    c, s = cos(theta), sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def waveplate(kind: str, angle_deg: float) -> np.ndarray:
    """Jones matrix of a half- or quarter-wave plate with its fast axis at ``angle_deg``.

    Global phases are chosen so that HWP(45) is exactly X and QWP(-45) is
    exactly exp(-i pi/4 X).
    """
    theta = radians(angle_deg)
    kind = kind.upper()
    if kind == "HWP":
        c, s = cos(2 * theta), sin(2 * theta)
        return np.array([[c, s], [s, -c]], dtype=complex)
    if kind == "QWP":
        r = _rotation(theta)
        retarder = np.diag([np.exp(1j * pi / 4), np.exp(-1j * pi / 4)])
        return r @ retarder @ r.T
    raise ValueError(f"unknown wave plate {kind!r}, expected 'HWP' or 'QWP'")


# -- counts and tomography ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CountTable:
    """Outcome counts per measurement setting.

    ``counts[setting][k]`` is the number of events where the qubits, measured
    in the per-qubit bases named by ``setting`` (e.g. ``"XZ"``), gave the
    outcome whose bit string is ``k`` written on ``num_qubits`` bits (qubit 1
    first). Outcome 0 is the +1 eigenvector of the basis.

    Counts are normally integers; :func:`expected_counts` produces real-valued
    tables carrying exact probabilities times the shot number.
    """

    num_qubits: int
    counts: Mapping[str, np.ndarray]

    def __post_init__(self):
        clean = {}
        for setting, arr in self.counts.items():
            _check_setting(setting, self.num_qubits)
            a = np.array(arr, dtype=float)
            if a.shape != (2**self.num_qubits,):
                raise DimensionError(f"setting {setting}: expected {2**self.num_qubits} outcomes, got {a.shape}")
            if np.any(a < 0) or not np.all(np.isfinite(a)):
                raise ValueError(f"setting {setting}: counts must be finite and non-negative")
            a.setflags(write=False)
            clean[setting] = a
        object.__setattr__(self, "counts", dict(sorted(clean.items())))

    @property
    def settings(self) -> list[str]:
        return list(self.counts)

    def total(self, setting: str) -> float:
        return float(self.counts[setting].sum())

    def rows(self) -> Iterator[tuple[str, str, float]]:
        for setting, arr in self.counts.items():
            for k, c in enumerate(arr):
                yield setting, format(k, f"0{self.num_qubits}b"), c

    def map_counts(self, fn: Callable[[np.ndarray], np.ndarray]) -> "CountTable":
        return CountTable(self.num_qubits, {s: fn(a) for s, a in self.counts.items()})


def _check_setting(setting: str, n: int) -> None:
    if len(setting) != n or any(c not in SETTING_BASES for c in setting):
        raise ValueError(f"invalid measurement setting {setting!r} for {n} qubit(s); use letters from X, Y, Z")


def all_settings(num_qubits: int) -> list[str]:
    return ["".join(s) for s in itertools.product("XYZ", repeat=num_qubits)]


def setting_probabilities(rho: DensityMatrix, setting: str) -> np.ndarray:
    """Born probabilities of the 2**n outcomes for one setting."""
    _check_setting(setting, rho.num_qubits)
    v = reduce(np.kron, [SETTING_BASES[c] for c in setting])
    p = np.real(np.einsum("ij,ik,kj->j", v.conj(), rho.matrix, v))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def simulate_counts(
    rho: DensityMatrix,
    settings: list[str],
    shots_per_setting: int,
    rng: np.random.Generator,
) -> CountTable:
    """Multinomial counts for every setting."""
    if shots_per_setting < 1:
        raise ValueError("shots_per_setting must be at least 1")
    counts = {}
    for s in settings:
        counts[s] = rng.multinomial(shots_per_setting, setting_probabilities(rho, s))
    return CountTable(rho.num_qubits, counts)


def expected_counts(rho: DensityMatrix, settings: list[str], shots_per_setting: float = 1.0) -> CountTable:
    """Noise-free counts: exact probabilities times the shot number."""
    return CountTable(rho.num_qubits, {s: shots_per_setting * setting_probabilities(rho, s) for s in settings})


def pauli_expectations(counts: CountTable) -> dict[str, float]:
    """Estimate <P> for every Pauli string P from the pooled compatible settings."""
    n = counts.num_qubits
    outcomes = np.arange(2**n)
    bits = (outcomes[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    out = {"I" * n: 1.0}
    for label in itertools.product("IXYZ", repeat=n):
        label = "".join(label)
        if label == "I" * n:
            continue
        active = [k for k, c in enumerate(label) if c != "I"]
        signs = 1 - 2 * (bits[:, active].sum(axis=1) % 2)
        num = den = 0.0
        for setting, arr in counts.counts.items():
            if all(setting[k] == label[k] for k in active):
                num += float(signs @ arr)
                den += float(arr.sum())
        if den == 0:
            raise ValueError(f"settings do not determine <{label}>: informationally incomplete counts")
        out[label] = num / den
    return out


def project_physical(m: np.ndarray) -> np.ndarray:
    """Nearest-physical fix-up: clip negative eigenvalues, renormalize the trace."""
    m = (np.asarray(m, dtype=complex) + np.asarray(m, dtype=complex).conj().T) / 2
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValueError("estimate has no positive spectral weight")
    w = w / w.sum()
    return (v * w) @ v.conj().T


def reconstruct(counts: CountTable, num_qubits: int | None = None) -> DensityMatrix:
    """Linear-inversion state estimate followed by projection onto physical states."""
    n = counts.num_qubits if num_qubits is None else num_qubits
    if n != counts.num_qubits:
        raise DimensionError(f"counts describe {counts.num_qubits} qubits, not {n}")
    for s in counts.settings:
        if counts.total(s) <= 0:
            raise ValueError(f"setting {s} has no counts")
    est = np.zeros((2**n, 2**n), dtype=complex)
    for label, value in pauli_expectations(counts).items():
        est += value * reduce(np.kron, [_PAULI[c] for c in label])
    return DensityMatrix(project_physical(est / 2**n))


def monte_carlo_error(
    counts: CountTable,
    estimator: Callable[[CountTable], float],
    cycles: int = 100,
    rng: np.random.Generator | None = None,
) -> EstimateWithError:
    """Poissonian resampling of every count; mean and std of the estimator over cycles.

    Each cycle draws from its own child generator, so the result depends only
    on the parent generator state, not on evaluation order.
    """
    if cycles < 2:
        raise ValueError("need at least two Monte-Carlo cycles")
    if rng is None:
        rng = np.random.default_rng()
    values = np.empty(cycles)
    for k, child in enumerate(rng.spawn(cycles)):
        sample = counts.map_counts(lambda a: child.poisson(a).astype(float))
        try:
            values[k] = float(estimator(sample))
        except Exception as exc:
            raise MonteCarloError(f"estimator failed on Monte-Carlo cycle {k}: {exc}") from exc
    return EstimateWithError(float(values.mean()), float(values.std(ddof=1)))


class MonteCarloError(RuntimeError):
    pass


def tomography_fidelity(
    rho: DensityMatrix,
    target: StateVector,
    shots_per_setting: int,
    rng: np.random.Generator,
    cycles: int = 100,
) -> tuple[DensityMatrix, EstimateWithError]:
    """Simulated full tomography of ``rho`` and the fidelity of the estimate to ``target``."""
    counts = simulate_counts(rho, all_settings(rho.num_qubits), shots_per_setting, rng)
    estimate = reconstruct(counts)
    err = monte_carlo_error(counts, lambda c: fidelity_mixed(reconstruct(c), target), cycles, rng)
    return estimate, err


# -- bundled reference data ---------------------------------------------------------


@dataclass(frozen=True)
class ReferenceFidelity:
    table: str
    state: str
    column: str
    fidelity: float
    std: float


def load_reference_fidelities() -> list[ReferenceFidelity]:
    """Experimentally measured decoded-qubit fidelities shipped with the package."""
    text = resources.files("mbqed").joinpath("data/reference_fidelities.csv").read_text(encoding="utf-8")
    rows = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
    return [
        ReferenceFidelity(r["table"], r["state"], r["column"], float(r["fidelity"]), float(r["std"]))
        for r in rows
    ]

