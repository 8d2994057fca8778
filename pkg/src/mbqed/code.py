"""
The two-qubit phase-error detection code driven by single-qubit measurements
on the box cluster.

Register conventions after encoding: the three remaining qubits are box
qubits 2, 3, 4 in that order (local indices 1, 2, 3). After the syndrome
readout only box qubit 4 is left and it carries the decoded output.
"""
from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, field
from math import acos, cos, degrees, isfinite, pi, radians, sin, sqrt
from typing import Union

import numpy as np

from . import noisetomo as nt
from .cluster import box_cluster, map_error_lab_to_box
from .noisetomo import DensityMatrix
from .statevec import (
    PAULIS,
    X,
    X_BASIS,
    MeasurementBasis,
    StateVector,
    ZeroProbabilityError,
    apply_single,
    fidelity_pure,
    measure,
    phase_rotation,
)

State = Union[StateVector, DensityMatrix]

_S = 1 / sqrt(2)


class SyndromeMismatchError(ValueError):
    """The syndrome cannot occur under the declared error hypothesis."""


class AbortedDecodeError(ValueError):
    pass


# -- logical inputs -------------------------------------------------------------


@dataclass(frozen=True)
class LogicalInput:
    """The qubit alpha|0> + beta|1> to protect."""

    alpha: complex
    beta: complex
    name: str | None = None

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {abs(a) ** 2 + abs(b) ** 2:.15g}, expected 1")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def normalized(cls, alpha: complex, beta: complex, name: str | None = None) -> "LogicalInput":
        norm = sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        if norm == 0:
            raise ValueError("alpha and beta cannot both vanish")
        return cls(alpha / norm, beta / norm, name)

    @classmethod
    def from_angles(cls, theta_deg: float, phi_deg: float, name: str | None = None) -> "LogicalInput":
        """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>, angles in degrees."""
        t, p = radians(theta_deg), radians(phi_deg)
        return cls(cos(t / 2), np.exp(1j * p) * sin(t / 2), name)

    @property
    def theta_deg(self) -> float:
        return degrees(2 * acos(min(abs(self.alpha), 1.0)))

    @property
    def phi_deg(self) -> float:
        if abs(self.alpha) < 1e-12 or abs(self.beta) < 1e-12:
            return 0.0
        phi = degrees(np.angle(self.beta) - np.angle(self.alpha))
        phi = (phi + 180) % 360 - 180
        # keep +180 rather than -180 for states on the negative x half-plane
        return 180.0 if abs(phi + 180) < 1e-9 else phi

    @property
    def state(self) -> StateVector:
        return StateVector(np.array([self.alpha, self.beta]))

    @property
    def label(self) -> str:
        return self.name or f"({self.alpha:.4g}, {self.beta:.4g})"


def _superpose(c0, k0, c1, k1):
    return c0 * np.asarray(k0) + c1 * np.asarray(k1)


_KETS = {
    "0": np.array([1, 0]),
    "1": np.array([0, 1]),
    "+": np.array([_S, _S]),
    "-": np.array([_S, -_S]),
    "+i": np.array([_S, 1j * _S]),
    "-i": np.array([_S, -1j * _S]),
}
_E = np.exp(1j * pi / 4)

# name -> (amplitudes as written in the catalog, eigen-operator label, (theta, phi) in degrees)
_CATALOG = {
    "0": (_KETS["0"], "σz", (0, 0)),
    "+": (_KETS["+"], "σx", (90, 0)),
    "-i": (_KETS["-i"], "-σy", (90, -90)),
    "T": (_superpose(_S, _KETS["+"], _S / _E, _KETS["-"]), "σz+σy", (45, 90)),
    "U": (_superpose(_S, _KETS["+"], _S * _E, _KETS["-"]), "σz-σy", (45, -90)),
    "Q": (_superpose(_S, _KETS["+i"], _S * _E, _KETS["-i"]), "σz+σx", (45, 0)),
    "N": (_superpose(_S, _KETS["+i"], _S / _E, _KETS["-i"]), "σz-σx", (45, 180)),
    "P": (_superpose(_S, _KETS["0"], _S * _E, _KETS["1"]), "σx+σy", (90, 45)),
    "M": (_superpose(_S, _KETS["0"], _S / _E, _KETS["1"]), "σx-σy", (90, -45)),
}
CATALOG_NAMES = tuple(_CATALOG)


@dataclass(frozen=True)
class CatalogEntry:
    input: LogicalInput
    eigen_operator: str
    listed_angles: tuple[float, float]


def catalog_entries() -> list[CatalogEntry]:
    return [
        CatalogEntry(LogicalInput(amps[0], amps[1], name), op, angles)
        for name, (amps, op, angles) in _CATALOG.items()
    ]


def catalog_states() -> list[LogicalInput]:
    """The nine named input states, in catalog order."""
    return [e.input for e in catalog_entries()]


def catalog_state(name: str) -> LogicalInput:
    key = name.strip().strip("|⟩>").replace("−", "-").replace("ᵢ", "i").replace("_i", "i")
    if key not in _CATALOG:
        raise KeyError(f"unknown catalog state {name!r}; known: {', '.join(CATALOG_NAMES)}")
    amps = _CATALOG[key][0]
    return LogicalInput(amps[0], amps[1], key)


# -- protocol vocabulary ----------------------------------------------------------


class ErrorTarget(enum.Enum):
    NONE = "none"
    QUBIT2 = "Z2"
    QUBIT3 = "Z3"
    BOTH = "Z2Z3"

    @property
    def box_qubits(self) -> tuple[int, ...]:
        return {"none": (), "Z2": (2,), "Z3": (3,), "Z2Z3": (2, 3)}[self.value]


@dataclass(frozen=True)
class ErrorSpec:
    """exp(-i angle Z) on each targeted box qubit."""

    target: ErrorTarget = ErrorTarget.NONE
    angle: float = pi / 2

    def __post_init__(self):
        object.__setattr__(self, "target", ErrorTarget(self.target))
        if not isfinite(self.angle):
            raise ValueError(f"error angle must be finite, got {self.angle}")

    @classmethod
    def from_waveplate(cls, target, kind: str, angle_deg: float) -> "ErrorSpec":
        """Error realized by a lab-frame wave plate on the image of ``target``.

        The plate is mapped back to the box frame; it must come out as a
        rotation about Z there.
        """
        u = nt.waveplate(kind, angle_deg)
        box = map_error_lab_to_box(3, u)[1]
        if abs(box[0, 1]) > 1e-12 or abs(box[1, 0]) > 1e-12:
            raise ValueError(f"{kind}({angle_deg}) is not a phase rotation in the box frame")
        theta = float(np.angle(box[1, 1] / box[0, 0])) / 2
        return cls(ErrorTarget(target), theta)

    @property
    def unitary(self) -> np.ndarray:
        return phase_rotation(self.angle)


NO_ERROR = ErrorSpec()


@dataclass(frozen=True)
class Syndrome:
    """X-basis outcomes of box qubits 2 and 3, each ``"+"`` or ``"-"``."""

    s2: str
    s3: str

    def __post_init__(self):
        if self.s2 not in "+-" or self.s3 not in "+-" or len(self.s2) != 1 or len(self.s3) != 1:
            raise ValueError(f"syndrome signs must be '+' or '-', got {self.s2!r}, {self.s3!r}")

    @classmethod
    def parse(cls, text: str) -> "Syndrome":
        t = text.replace("−", "-").strip()
        if len(t) != 2:
            raise ValueError(f"cannot parse syndrome {text!r}")
        return cls(t[0], t[1])

    @property
    def bits(self) -> tuple[int, int]:
        return int(self.s2 == "-"), int(self.s3 == "-")

    @property
    def parity_even(self) -> bool:
        return self.s2 == self.s3

    def __str__(self):
        return self.s2 + self.s3


ALL_SYNDROMES = tuple(Syndrome(a, b) for a in "+-" for b in "+-")


class RecoveryOp(enum.Enum):
    IDENTITY = "I"
    X = "X"
    DETECT_ONLY_ABORT = "abort"


class Hypothesis(enum.Enum):
    NO_ERROR = "no_error"
    Z2 = "Z2"
    Z3 = "Z3"
    UNKNOWN_LOCATION = "unknown_location"


class Location(enum.Enum):
    KNOWN = "known_location"
    UNKNOWN = "unknown_location"


class Branch(enum.Enum):
    PRIMARY = "primary_projection"
    CORRECTED = "corrected_projection"
    UNCORRECTED = "uncorrected_projection"


def hypothesis_for(error: ErrorSpec, location: Location = Location.KNOWN) -> Hypothesis:
    """Hypothesis used for recovery given what is known about the error."""
    if Location(location) is Location.UNKNOWN:
        return Hypothesis.UNKNOWN_LOCATION
    return {
        ErrorTarget.NONE: Hypothesis.NO_ERROR,
        ErrorTarget.QUBIT2: Hypothesis.Z2,
        ErrorTarget.QUBIT3: Hypothesis.Z3,
        # no single-location hypothesis covers a double error
        ErrorTarget.BOTH: Hypothesis.UNKNOWN_LOCATION,
    }[error.target]


# -- encoding -----------------------------------------------------------------


def encoding_basis(inp: LogicalInput) -> MeasurementBasis:
    """{alpha*|0> + beta*|1>, beta|0> - alpha|1>}."""
    a, b = inp.alpha, inp.beta
    return MeasurementBasis(np.array([np.conj(a), np.conj(b)]), np.array([b, -a]))


def _measure(state: State, qubit: int, basis: MeasurementBasis, outcome=None, rng=None):
    if isinstance(state, DensityMatrix):
        return nt.measure_density(state, qubit, basis, outcome=outcome, rng=rng)
    return measure(state, qubit, basis, outcome=outcome, rng=rng)


def _apply(state: State, qubit: int, u) -> State:
    if isinstance(state, DensityMatrix):
        return nt.apply_unitary(state, qubit, u)
    return apply_single(state, qubit, u)


def _apply_paulis(state: State, labels) -> State:
    for q, lab in enumerate(labels, start=1):
        if lab != "I":
            state = _apply(state, q, PAULIS[lab])
    return state


def _ideal_branches(inp: LogicalInput) -> tuple[StateVector, StateVector]:
    basis = encoding_basis(inp)
    box = box_cluster()
    return measure(box, 1, basis, outcome=0)[2], measure(box, 1, basis, outcome=1)[2]


def correction_works(inp: LogicalInput, paulis: tuple[str, str, str], tol: float = 1e-12) -> bool:
    """Whether the Pauli string on box qubits (2, 3, 4) maps the second encoding branch onto the first."""
    primary, secondary = _ideal_branches(inp)
    return fidelity_pure(_apply_paulis(secondary, paulis), primary) >= 1 - tol


_PAULI_ORDER = "IZXY"


@functools.lru_cache(maxsize=256)
def branch_correction(inp: LogicalInput, tol: float = 1e-12) -> tuple[str, str, str] | None:
    """Local Pauli correction for the second encoding outcome, or None.

    Searches all 64 Pauli strings on box qubits 2, 3, 4 (global phase free)
    and returns the lowest-weight one that turns the second-outcome state
    into the first-outcome state. A correction exists exactly when the input
    lies on one of the three coordinate planes of the Bloch sphere.
    """
    primary, secondary = _ideal_branches(inp)
    candidates = sorted(
        itertools.product(_PAULI_ORDER, repeat=3),
        key=lambda p: (sum(c != "I" for c in p), [_PAULI_ORDER.index(c) for c in p]),
    )
    for paulis in candidates:
        if fidelity_pure(_apply_paulis(secondary, paulis), primary) >= 1 - tol:
            return paulis
    return None


@dataclass(frozen=True, eq=False)
class EncodedState:
    state: State
    branch: Branch
    probability: float
    correction: tuple[str, str, str] | None = None


def encode(
    resource: State,
    inp: LogicalInput,
    *,
    outcome: int | None = None,
    rng: np.random.Generator | None = None,
) -> EncodedState:
    """Measure qubit 1 of the resource in the encoding basis.

    ``outcome`` forces the branch (0: first basis vector, 1: second). On the
    second branch the Pauli correction is applied when one exists; otherwise
    the raw state is returned and the branch is flagged uncorrected.
    """
    if resource.num_qubits != 4:
        raise ValueError(f"resource must have 4 qubits, got {resource.num_qubits}")
    k, p, post = _measure(resource, 1, encoding_basis(inp), outcome, rng)
    if k == 0:
        return EncodedState(post, Branch.PRIMARY, p)
    fix = branch_correction(inp)
    if fix is None:
        return EncodedState(post, Branch.UNCORRECTED, p)
    return EncodedState(_apply_paulis(post, fix), Branch.CORRECTED, p, fix)


def apply_phase_error(state: State, spec: ErrorSpec) -> State:
    """exp(-i angle Z) on each targeted qubit of the encoded register."""
    if state.num_qubits != 3:
        raise ValueError(f"encoded register must have 3 qubits, got {state.num_qubits}")
    u = spec.unitary
    for box_q in spec.target.box_qubits:
        state = _apply(state, box_q - 1, u)
    return state


def syndrome_measure(
    state: State,
    *,
    syndrome: Syndrome | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[Syndrome, float, State]:
    """X-basis readout of box qubits 2 and 3; returns the syndrome, its
    joint probability and the untouched qubit 4."""
    if state.num_qubits != 3:
        raise ValueError(f"encoded register must have 3 qubits, got {state.num_qubits}")
    forced = syndrome.bits if syndrome is not None else (None, None)
    k2, p2, rest = _measure(state, 1, X_BASIS, forced[0], rng)
    k3, p3, q4 = _measure(rest, 1, X_BASIS, forced[1], rng)
    return Syndrome("+-"[k2], "+-"[k3]), p2 * p3, q4


def digitalization_profile(theta: float) -> tuple[float, float]:
    """Probabilities that readout projects exp(-i theta Z) onto no error / a full Z error."""
    return cos(theta) ** 2, sin(theta) ** 2


# (hypothesis, syndrome) -> recovery; cells absent from the table are mismatches
_I, _X, _ABORT = RecoveryOp.IDENTITY, RecoveryOp.X, RecoveryOp.DETECT_ONLY_ABORT
RECOVERY_TABLE = {
    (Hypothesis.NO_ERROR, "++"): _I,
    (Hypothesis.NO_ERROR, "--"): _X,
    (Hypothesis.Z2, "++"): _I,
    (Hypothesis.Z2, "--"): _X,
    (Hypothesis.Z2, "-+"): _I,
    (Hypothesis.Z2, "+-"): _X,
    (Hypothesis.Z3, "++"): _I,
    (Hypothesis.Z3, "--"): _X,
    (Hypothesis.Z3, "+-"): _I,
    (Hypothesis.Z3, "-+"): _X,
    (Hypothesis.UNKNOWN_LOCATION, "++"): _I,
    (Hypothesis.UNKNOWN_LOCATION, "--"): _X,
    (Hypothesis.UNKNOWN_LOCATION, "+-"): _ABORT,
    (Hypothesis.UNKNOWN_LOCATION, "-+"): _ABORT,
}


def recovery_lookup(hypothesis: Hypothesis, syndrome: Syndrome) -> RecoveryOp:
    """Recovery on qubit 4 for a syndrome under an error hypothesis.

    A known error location (Z2 or Z3) also covers the case where a partial
    rotation was projected onto "no error", so those hypotheses accept the
    even-parity syndromes too. Raises SyndromeMismatchError when the syndrome
    reveals an error the hypothesis excludes.
    """
    key = (Hypothesis(hypothesis), str(syndrome))
    if key not in RECOVERY_TABLE:
        raise SyndromeMismatchError(f"syndrome/hypothesis mismatch: {syndrome} under {key[0].value}")
    return RECOVERY_TABLE[key]


def decode(qubit4: State, recovery: RecoveryOp) -> State:
    if recovery is RecoveryOp.DETECT_ONLY_ABORT:
        raise AbortedDecodeError("error detected at an unknown location; nothing to decode")
    if qubit4.num_qubits != 1:
        raise ValueError(f"decode expects a single qubit, got {qubit4.num_qubits}")
    return _apply(qubit4, 1, X) if recovery is RecoveryOp.X else qubit4


def state_fidelity(state: State, target: StateVector) -> float:
    if isinstance(state, DensityMatrix):
        return nt.fidelity_mixed(state, target)
    return fidelity_pure(state, target)


# -- full runs ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProtocolRecord:
    input: LogicalInput
    error: ErrorSpec
    hypothesis: Hypothesis
    branch: Branch
    encoding_probability: float
    correction: tuple[str, str, str] | None
    syndrome: Syndrome
    syndrome_probability: float
    recovery: RecoveryOp | None
    pre_recovery: State
    decoded: State | None
    expected: StateVector | None = None
    mismatch: bool = False
    confusable: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def probability(self) -> float:
        return self.encoding_probability * self.syndrome_probability

    @property
    def aborted(self) -> bool:
        return self.decoded is None

    @property
    def decoded_fidelity_vs_ideal(self) -> float | None:
        return None if self.decoded is None else state_fidelity(self.decoded, self.input.state)

    @property
    def decoded_fidelity_vs_expected(self) -> float | None:
        if self.decoded is None or self.expected is None:
            return None
        return state_fidelity(self.decoded, self.expected)


def _run(resource, inp, error, hypothesis, branch, syndrome, rng):
    enc = encode(resource, inp, outcome=branch, rng=rng)
    damaged = apply_phase_error(enc.state, error)
    synd, p_synd, q4 = syndrome_measure(damaged, syndrome=syndrome, rng=rng)
    mismatch = False
    try:
        recovery = recovery_lookup(hypothesis, synd)
    except SyndromeMismatchError:
        recovery, mismatch = None, True
    decoded = None if recovery in (None, RecoveryOp.DETECT_ONLY_ABORT) else decode(q4, recovery)
    return enc, synd, p_synd, q4, recovery, decoded, mismatch


def run_protocol(
    inp: LogicalInput,
    error: ErrorSpec = NO_ERROR,
    resource: State | None = None,
    *,
    location: Location = Location.KNOWN,
    branch: int | None = None,
    syndrome: Syndrome | None = None,
    rng: np.random.Generator | None = None,
) -> ProtocolRecord:
    """Encode, inject the error, read the syndrome, recover and decode.

    ``branch`` and ``syndrome`` force the corresponding measurement outcomes;
    anything not forced is sampled from ``rng``. ``resource`` defaults to the
    ideal box cluster and may be a mixed state.
    """
    if resource is None:
        resource = box_cluster()
    hypothesis = hypothesis_for(error, location)
    enc, synd, p_synd, q4, recovery, decoded, mismatch = _run(
        resource, inp, error, hypothesis, branch, syndrome, rng
    )
    enc_outcome = 0 if enc.branch is Branch.PRIMARY else 1

    expected = None
    if decoded is not None:
        ideal = box_cluster()
        if isinstance(resource, StateVector) and fidelity_pure(resource, ideal) >= 1 - 1e-12:
            expected = decoded
        else:
            try:
                expected = _run(ideal, inp, error, hypothesis, enc_outcome, synd, None)[5]
            except ZeroProbabilityError:
                expected = None

    notes = []
    confusable = error.target is ErrorTarget.BOTH and synd.parity_even
    if confusable:
        notes.append("double-error confusion: syndrome indistinguishable from no error")
    if enc.branch is Branch.UNCORRECTED:
        notes.append("second encoding branch has no Pauli correction; decoded state is not the input")
    if mismatch:
        notes.append(f"syndrome {synd} contradicts hypothesis {hypothesis.value}")
    return ProtocolRecord(
        input=inp,
        error=error,
        hypothesis=hypothesis,
        branch=enc.branch,
        encoding_probability=enc.probability,
        correction=enc.correction,
        syndrome=synd,
        syndrome_probability=p_synd,
        recovery=recovery,
        pre_recovery=q4,
        decoded=decoded,
        expected=expected if isinstance(expected, StateVector) else None,
        mismatch=mismatch,
        confusable=confusable,
        notes=tuple(notes),
    )


def outcome_distribution(
    inp: LogicalInput,
    error: ErrorSpec = NO_ERROR,
    resource: State | None = None,
    location: Location = Location.KNOWN,
) -> list[ProtocolRecord]:
    """Every (encoding branch, syndrome) outcome with non-zero probability."""
    if resource is None:
        resource = box_cluster()
    out = []
    for branch in (0, 1):
        for synd in ALL_SYNDROMES:
            try:
                out.append(
                    run_protocol(inp, error, resource, location=location, branch=branch, syndrome=synd)
                )
            except ZeroProbabilityError:
                continue
    return out


@dataclass(frozen=True, eq=False)
class Ensemble:
    outcomes: list[ProtocolRecord]
    counts: np.ndarray

    @property
    def shots(self) -> int:
        return int(self.counts.sum())

    def syndrome_counts(self) -> dict[str, int]:
        tally = {str(s): 0 for s in ALL_SYNDROMES}
        for rec, c in zip(self.outcomes, self.counts):
            tally[str(rec.syndrome)] += int(c)
        return tally

    def shots_per_record(self):
        return zip(self.outcomes, (int(c) for c in self.counts))


def run_ensemble(
    inp: LogicalInput,
    error: ErrorSpec,
    shots: int,
    rng: np.random.Generator,
    resource: State | None = None,
    location: Location = Location.KNOWN,
) -> Ensemble:
    """``shots`` independent protocol runs.

    The joint (branch, syndrome) distribution is computed once with forced
    outcomes and the shots are drawn from it in a single multinomial draw,
    which is equivalent to sampling every run sequentially.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    outcomes = outcome_distribution(inp, error, resource, location)
    probs = np.array([r.probability for r in outcomes])
    counts = rng.multinomial(shots, probs / probs.sum())
    return Ensemble(outcomes, counts)


def make_input(alpha: complex, beta: complex, name: str | None = None) -> LogicalInput:
    return LogicalInput.normalized(alpha, beta, name)


__all__ = [
    "LogicalInput",
    "CatalogEntry",
    "catalog_states",
    "catalog_entries",
    "catalog_state",
    "CATALOG_NAMES",
    "ErrorTarget",
    "ErrorSpec",
    "NO_ERROR",
    "Syndrome",
    "ALL_SYNDROMES",
    "RecoveryOp",
    "Hypothesis",
    "Location",
    "Branch",
    "hypothesis_for",
    "encoding_basis",
    "branch_correction",
    "correction_works",
    "EncodedState",
    "encode",
    "apply_phase_error",
    "syndrome_measure",
    "digitalization_profile",
    "recovery_lookup",
    "RECOVERY_TABLE",
    "decode",
    "state_fidelity",
    "ProtocolRecord",
    "run_protocol",
    "outcome_distribution",
    "Ensemble",
    "run_ensemble",
    "SyndromeMismatchError",
    "AbortedDecodeError",
    "make_input",
]
