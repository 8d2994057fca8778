"""
Scenario configuration, batch runs and report emission.

Config files are flat YAML mappings; see README.md for the grammar. Angles
always carry an explicit unit suffix (``deg`` or ``rad``), e.g. ``pi/4 rad``
or ``45deg``.
"""
from __future__ import annotations

import csv
import io
import json
import re
import secrets
from dataclasses import dataclass, field, replace
from math import isclose, pi

import numpy as np
import yaml

from . import __version__
from .cluster import GraphSpec, box_cluster, graph_state, lab_cluster, lab_to_box
from .code import (
    ALL_SYNDROMES,
    CATALOG_NAMES,
    Branch,
    ErrorSpec,
    ErrorTarget,
    Location,
    LogicalInput,
    RECOVERY_TABLE,
    catalog_entries,
    catalog_state,
    hypothesis_for,
    run_ensemble,
)
from .noisetomo import (
    DensityMatrix,
    EstimateWithError,
    all_settings,
    bloch_vector,
    fidelity_mixed,
    load_reference_fidelities,
    mix_white_noise,
    monte_carlo_error,
    reconstruct,
    simulate_counts,
    to_density,
    white_noise_parameter,
)
from .statevec import StateVector

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_ANGLE_RE = re.compile(
    rf"^\s*(?:(?P<num>{_NUM})|(?P<coef>[+-]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*(?:pi|π)\s*(?:/\s*(?P<den>{_NUM}))?)"
    r"\s*(?P<unit>deg|rad)\s*$"
)


def parse_angle(text, *, unit: str = "rad") -> float:
    """Parse ``"45deg"``, ``"pi/4 rad"``, ``"-0.5 rad"``... and return the angle in ``unit``."""
    m = _ANGLE_RE.match(str(text))
    if not m:
        raise ValueError(f"cannot parse angle {text!r}; use a number or pi-expression followed by 'deg' or 'rad'")
    if m["num"] is not None:
        value = float(m["num"])
    else:
        coef = m["coef"]
        value = pi * (float(coef + "1") if coef in ("", "+", "-") else float(coef))
        if m["den"]:
            value /= float(m["den"])
    if m["unit"] == "deg":
        value = np.deg2rad(value)
    return float(value) if unit == "rad" else float(np.rad2deg(value))


@dataclass(frozen=True)
class ResourceSpec:
    """The four-qubit resource fed to the protocol.

    ``ideal`` (alias ``box``) is the box cluster; ``lab`` is the lab-frame
    cluster carried into the box frame; ``graph:1-2,1-3,...`` is any
    four-qubit graph state; the two white-noise forms mix the box cluster.
    """

    kind: str = "ideal"
    param: float | None = None
    edges: str | None = None

    @classmethod
    def parse(cls, text: str) -> "ResourceSpec":
        t = str(text).strip()
        if t in ("ideal", "box"):
            return cls()
        if t == "lab":
            return cls("lab")
        if t.startswith("graph:"):
            g = GraphSpec.parse(t[len("graph:"):], num_qubits=4)
            if g.num_qubits != 4:
                raise ValueError("graph resource must have 4 qubits")
            return cls("graph", edges=",".join(f"{a}-{b}" for a, b in sorted(g.edges)))
        m = re.fullmatch(r"(white_noise|white_noise_fidelity)\(\s*(" + _NUM + r")\s*\)", t)
        if not m:
            raise ValueError(
                f"unknown resource {text!r}; use ideal, box, lab, graph:<edges>, white_noise(p) or white_noise_fidelity(F)"
            )
        spec = cls(m[1], float(m[2]))
        spec.mixing()
        return spec

    def mixing(self) -> float:
        """The white-noise mixing parameter p (1 for noiseless resources)."""
        if self.kind == "white_noise":
            if not 0 <= self.param <= 1:
                raise ValueError(f"white_noise p must lie in [0, 1], got {self.param}")
            return self.param
        if self.kind == "white_noise_fidelity":
            return white_noise_parameter(self.param, 4)
        return 1.0

    def build(self) -> StateVector | DensityMatrix:
        if self.kind == "lab":
            return lab_to_box(lab_cluster())
        if self.kind == "graph":
            return graph_state(GraphSpec.parse(self.edges, num_qubits=4))
        if self.kind == "ideal":
            return box_cluster()
        return mix_white_noise(to_density(box_cluster()), self.mixing())

    def __str__(self):
        if self.kind in ("ideal", "lab"):
            return self.kind
        if self.kind == "graph":
            return f"graph:{self.edges}"
        return f"{self.kind}({self.param:g})"


@dataclass(frozen=True)
class ScenarioConfig:
    input: LogicalInput
    input_form: dict
    error: ErrorTarget = ErrorTarget.NONE
    error_angle: float = pi / 2
    location: Location = Location.KNOWN
    resource: ResourceSpec = field(default_factory=ResourceSpec)
    shots: int = 10_000
    tomography: bool = False
    shots_per_setting: int = 10_000
    mc_cycles: int = 100
    seed: int = 0
    seed_generated: bool = False
    output: str | None = None
    format: str = "json"

    @property
    def error_spec(self) -> ErrorSpec:
        return ErrorSpec(self.error, self.error_angle)

    def echo(self) -> dict:
        return {
            "input_state": self.input_form,
            "error": self.error.value,
            "error_angle_rad": self.error_angle,
            "hypothesis": self.location.value,
            "resource": str(self.resource),
            "resource_mixing_p": self.resource.mixing(),
            "shots": self.shots,
            "tomography": self.tomography,
            "shots_per_setting": self.shots_per_setting if self.tomography else None,
            "mc_cycles": self.mc_cycles if self.tomography else None,
            "format": self.format,
        }


CONFIG_KEYS = {
    "input_state",
    "input_amplitudes",
    "input_angles",
    "error",
    "error_angle",
    "hypothesis",
    "resource",
    "shots",
    "tomography",
    "shots_per_setting",
    "mc_cycles",
    "seed",
    "output",
    "format",
}
_INPUT_KEYS = ("input_state", "input_amplitudes", "input_angles")


def _key_lines(text: str) -> dict[str, int]:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def parse_config(text: str) -> ScenarioConfig:
    """Validate a config document and fill in defaults."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a flat key-value mapping")
    lines = _key_lines(text)

    def where(key):
        return f"line {lines[key]}: " if key in lines else ""

    def fail(key, msg):
        raise ConfigError(f"{where(key)}{key}: {msg}")

    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{where(key)}unknown key {key!r}")
        if isinstance(value, (dict, list)) and key not in ("input_amplitudes", "input_angles"):
            fail(key, "expected a scalar value")

    given = [k for k in _INPUT_KEYS if k in raw]
    if not given:
        raise ConfigError("missing input state: give one of " + ", ".join(_INPUT_KEYS))
    if len(given) > 1:
        fail(given[1], f"conflicts with {given[0]}; give exactly one input-state form")
    key = given[0]
    value = raw[key]
    try:
        if key == "input_state":
            if isinstance(value, bool):
                raise ValueError("expected a catalog name")
            inp = catalog_state(str(value))
            form = {"catalog": inp.name}
        elif key == "input_amplitudes":
            if not isinstance(value, list) or len(value) != 4:
                raise ValueError("expected [alpha_re, alpha_im, beta_re, beta_im]")
            a_re, a_im, b_re, b_im = (float(v) for v in value)
            inp = LogicalInput.normalized(complex(a_re, a_im), complex(b_re, b_im))
            form = {"amplitudes": [a_re, a_im, b_re, b_im]}
        else:
            if not isinstance(value, list) or len(value) != 2:
                raise ValueError("expected [theta, phi] with unit suffixes, e.g. [45deg, 180deg]")
            theta, phi = (parse_angle(v, unit="deg") for v in value)
            inp = LogicalInput.from_angles(theta, phi)
            form = {"bloch_angles_deg": [theta, phi]}
    except (KeyError, ValueError) as exc:
        fail(key, str(exc).strip("'\""))

    cfg = {}
    try:
        if "error" in raw:
            key = "error"
            cfg["error"] = ErrorTarget(str(raw["error"]))
        if "error_angle" in raw:
            key = "error_angle"
            cfg["error_angle"] = parse_angle(raw["error_angle"])
        if "hypothesis" in raw:
            key = "hypothesis"
            cfg["location"] = Location(str(raw["hypothesis"]))
        if "resource" in raw:
            key = "resource"
            cfg["resource"] = ResourceSpec.parse(raw["resource"])
        for key in ("shots", "shots_per_setting", "mc_cycles"):
            if key in raw:
                v = raw[key]
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ValueError("expected an integer")
                lo = 2 if key == "mc_cycles" else 1
                if v < lo:
                    raise ValueError(f"must be at least {lo}")
                cfg[key] = v
        if "tomography" in raw:
            key = "tomography"
            if not isinstance(raw["tomography"], bool):
                raise ValueError("expected true or false")
            cfg["tomography"] = raw["tomography"]
        if "seed" in raw:
            key = "seed"
            cfg["seed"] = _check_seed(raw["seed"])
        if "output" in raw:
            key = "output"
            cfg["output"] = str(raw["output"])
        if "format" in raw:
            key = "format"
            if raw["format"] not in ("json", "csv"):
                raise ValueError("expected json or csv")
            cfg["format"] = raw["format"]
    except ValueError as exc:
        fail(key, str(exc))

    if "seed" not in cfg:
        cfg["seed"], cfg["seed_generated"] = secrets.randbits(64), True
    return ScenarioConfig(input=inp, input_form=form, **cfg)


def _check_seed(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
        raise ValueError("seed must be an integer in [0, 2**64)")
    return value


def with_overrides(config: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Replace fields, ignoring overrides that are None."""
    clean = {k: v for k, v in overrides.items() if v is not None}
    if "seed" in clean:
        clean["seed"] = _check_seed(clean["seed"])
        clean["seed_generated"] = False
    if "shots" in clean and clean["shots"] < 1:
        raise ConfigError("shots: must be at least 1")
    if "format" in clean and clean["format"] not in ("json", "csv"):
        raise ConfigError("format: expected json or csv")
    return replace(config, **clean)


# -- running -------------------------------------------------------------------


def _r(x: float | None, digits: int = 12):
    return None if x is None else float(round(float(x), digits)) + 0.0


def _bloch(state) -> list[float]:
    rho = state if isinstance(state, DensityMatrix) else to_density(state)
    return [_r(v) for v in bloch_vector(rho)]


def _mixture(weighted) -> DensityMatrix:
    total = sum(w for w, _ in weighted)
    m = sum(w * (s.matrix if isinstance(s, DensityMatrix) else to_density(s).matrix) for w, s in weighted)
    return DensityMatrix(m / total)


@dataclass(frozen=True, eq=False)
class RunReport:
    """Aggregated outcome of one scenario; ``data`` is the JSON document."""

    config: ScenarioConfig
    data: dict

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["seed", "input", "error", "error_angle_rad", "hypothesis", "resource", "syndrome",
                    "count", "frequency", "expected_probability", "recovery", "confusable",
                    "fidelity_vs_ideal", "fidelity_vs_expected", "tomography_fidelity", "tomography_std"])
        cfg = self.data["config"]
        for s, row in self.data["syndromes"].items():
            tomo = row.get("tomography") or {}
            fid = tomo.get("fidelity") or {}
            w.writerow([self.data["seed"], self.data["input"]["label"], cfg["error"], cfg["error_angle_rad"],
                        cfg["hypothesis"], cfg["resource"], s, row["count"], row["frequency"],
                        row["expected_probability"], row["recovery"], row["confusable"],
                        row["fidelity_vs_ideal"], row["fidelity_vs_expected"],
                        fid.get("mean"), fid.get("std")])
        return buf.getvalue()

    def render(self, fmt: str | None = None) -> str:
        return self.to_csv() if (fmt or self.config.format) == "csv" else self.to_json()


def run_scenario(config: ScenarioConfig) -> RunReport:
    """Run ``config.shots`` protocol runs and aggregate them.

    The protocol shots and the simulated tomography draw from independent
    streams spawned from the seed, so switching tomography on does not change
    the syndrome statistics.
    """
    shot_seq, tomo_seq = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(shot_seq)
    inp, error = config.input, config.error_spec
    hypothesis = hypothesis_for(error, config.location)
    ens = run_ensemble(inp, error, config.shots, rng, config.resource.build(), config.location)
    shots = ens.shots

    branches = {b.value: 0 for b in Branch}
    per_synd = {str(s): [] for s in ALL_SYNDROMES}
    for rec, n in ens.shots_per_record():
        branches[rec.branch.value] += n
        per_synd[str(rec.syndrome)].append((rec, n))

    fid_values, fid_weights = [], []
    aborts = mismatches = confusable = even_shots = 0
    syndromes = {}
    tomo_rngs = dict(zip((str(s) for s in ALL_SYNDROMES), tomo_seq.spawn(len(ALL_SYNDROMES))))
    for s in ALL_SYNDROMES:
        key = str(s)
        recs = per_synd[key]
        count = sum(n for _, n in recs)
        p_exp = sum(r.probability for r, _ in recs)
        recovery = RECOVERY_TABLE.get((hypothesis, key))
        row = {
            "count": count,
            "frequency": _r(count / shots),
            "expected_probability": _r(p_exp),
            "recovery": recovery.value if recovery else "mismatch",
            "confusable": any(r.confusable for r, _ in recs),
            "fidelity_vs_ideal": None,
            "fidelity_vs_expected": None,
            "bloch_pre_recovery": None,
            "bloch_post_recovery": None,
            "tomography": None,
        }
        if s.parity_even:
            even_shots += count
        for r, n in recs:
            confusable += n * r.confusable
            mismatches += n * r.mismatch
            aborts += n * (r.decoded is None and not r.mismatch)
            if r.decoded is not None and n:
                fid_values.append(r.decoded_fidelity_vs_ideal)
                fid_weights.append(n)
        if recs:
            weights = [r.probability for r, _ in recs]
            row["bloch_pre_recovery"] = _bloch(_mixture(list(zip(weights, (r.pre_recovery for r, _ in recs)))))
            decoded = [(w, r) for w, (r, _) in zip(weights, recs) if r.decoded is not None]
            if decoded:
                wsum = sum(w for w, _ in decoded)
                post = _mixture([(w, r.decoded) for w, r in decoded])
                row["bloch_post_recovery"] = _bloch(post)
                row["fidelity_vs_ideal"] = _r(sum(w * r.decoded_fidelity_vs_ideal for w, r in decoded) / wsum)
                if all(r.expected is not None for _, r in decoded):
                    row["fidelity_vs_expected"] = _r(
                        sum(w * r.decoded_fidelity_vs_expected for w, r in decoded) / wsum
                    )
                if config.tomography:
                    target = decoded[0][1].expected or inp.state
                    row["tomography"] = _tomography(post, target, config, np.random.default_rng(tomo_rngs[key]))
        syndromes[key] = row

    if fid_weights:
        v, w = np.array(fid_values), np.array(fid_weights, dtype=float)
        mean = float(np.average(v, weights=w))
        std = float(np.sqrt(np.average((v - mean) ** 2, weights=w)))
        decoded_fid = {"mean": _r(mean), "std": _r(std)}
    else:
        decoded_fid = None

    data = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "mbqed", "version": __version__},
        "seed": config.seed,
        "seed_generated": config.seed_generated,
        "config": config.echo(),
        "input": {
            "label": inp.label,
            "alpha": [_r(inp.alpha.real), _r(inp.alpha.imag)],
            "beta": [_r(inp.beta.real), _r(inp.beta.imag)],
            "theta_deg": _r(inp.theta_deg, 9),
            "phi_deg": _r(inp.phi_deg, 9),
            "bloch_ideal": _bloch(inp.state),
        },
        "shots": shots,
        "hypothesis_used": hypothesis.value,
        "branches": branches,
        "syndromes": syndromes,
        "aborted_shots": aborts,
        "mismatch_shots": mismatches,
        "confusable_shots": confusable,
        "confusable_fraction_of_even_syndromes": _r(confusable / even_shots) if even_shots else None,
        "decoded_fidelity": decoded_fid,
    }
    return RunReport(config, data)


def _tomography(rho: DensityMatrix, target: StateVector, config: ScenarioConfig, rng) -> dict:
    counts = simulate_counts(rho, all_settings(1), config.shots_per_setting, rng)
    estimate = reconstruct(counts)
    estimators = {
        "fidelity": lambda c: fidelity_mixed(reconstruct(c), target),
        "x": lambda c: bloch_vector(reconstruct(c))[0],
        "y": lambda c: bloch_vector(reconstruct(c))[1],
        "z": lambda c: bloch_vector(reconstruct(c))[2],
    }
    mc = {k: monte_carlo_error(counts, f, config.mc_cycles, rng) for k, f in estimators.items()}
    return {
        "shots_per_setting": config.shots_per_setting,
        "bloch": _bloch(estimate),
        "bloch_std": [_r(mc[k].std) for k in "xyz"],
        "fidelity_point": _r(fidelity_mixed(estimate, target)),
        "fidelity": {"mean": _r(mc["fidelity"].mean), "std": _r(mc["fidelity"].std)},
    }


# -- table reproduction -------------------------------------------------------

# (table family, error) -> column label, syndrome without recovery, syndrome with recovery
_COLUMNS = {
    ("pi2", ErrorTarget.NONE): [("none", "++", "--")],
    ("pi2", ErrorTarget.QUBIT3): [("Z3", "+-", "-+")],
    ("pi2", ErrorTarget.QUBIT2): [("Z2", "-+", "+-")],
    ("pi2", ErrorTarget.BOTH): [("Z2Z3", "++", "--")],
    ("pi4", ErrorTarget.QUBIT3): [("Z3:no_error", "++", "--"), ("Z3:error", "+-", "-+")],
    ("pi4", ErrorTarget.QUBIT2): [("Z2:no_error", "++", "--"), ("Z2:error", "-+", "+-")],
}
TABLE_COLUMNS = {
    "pi2": ["none", "Z3", "Z2", "Z2Z3"],
    "pi4": ["Z3:no_error", "Z3:error", "Z2:no_error", "Z2:error"],
}
TABLE_IDS = ["pi2_no_recovery", "pi2_recovery", "pi4_no_recovery", "pi4_recovery"]


def _family(report: RunReport) -> str | None:
    cfg = report.config
    if cfg.error is ErrorTarget.NONE:
        return "pi2"
    if isclose(cfg.error_angle, pi / 2, abs_tol=1e-9):
        return "pi2"
    if isclose(cfg.error_angle, pi / 4, abs_tol=1e-9):
        return "pi4"
    return None


def table_cells(reports: list[RunReport]) -> dict[tuple[str, str, str], EstimateWithError]:
    """(table id, state, column) -> simulated decoded fidelity."""
    cells = {}
    for rep in reports:
        fam = _family(rep)
        if fam is None or (fam, rep.config.error) not in _COLUMNS:
            continue
        state = rep.config.input.label
        for column, s_keep, s_fix in _COLUMNS[(fam, rep.config.error)]:
            for suffix, synd in (("no_recovery", s_keep), ("recovery", s_fix)):
                row = rep.data["syndromes"][synd]
                tomo = row.get("tomography")
                if tomo:
                    est = EstimateWithError(tomo["fidelity"]["mean"], tomo["fidelity"]["std"])
                elif row["fidelity_vs_expected"] is not None:
                    est = EstimateWithError(row["fidelity_vs_expected"], 0.0)
                else:
                    continue
                cells[(f"{fam}_{suffix}", state, column)] = est
    return cells


def emit_table_reproduction(reports: list[RunReport], reference: bool = True) -> str:
    """States x error-columns tables of decoded fidelities, as CSV.

    Missing cells are written as ``NA``. With ``reference`` each column is
    followed by the bundled experimental values, labeled ``experimental``.
    """
    cells = table_cells(reports)
    ref = {(r.table, r.state, r.column): r for r in load_reference_fidelities()} if reference else {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for table in TABLE_IDS:
        cols = TABLE_COLUMNS[table.split("_")[0]]
        header = ["table", "state"]
        for c in cols:
            header += [f"{c} F", f"{c} std"]
            if reference:
                header += [f"{c} experimental F", f"{c} experimental std"]
        w.writerow(header)
        for state in CATALOG_NAMES:
            row = [table, state]
            for c in cols:
                est = cells.get((table, state, c))
                row += ["NA", "NA"] if est is None else [f"{est.mean:.3f}", f"{est.std:.3f}"]
                if reference:
                    r = ref.get((table, state, c))
                    row += ["NA", "NA"] if r is None else [f"{r.fidelity:.3f}", f"{r.std:.3f}"]
            w.writerow(row)
        w.writerow([])
    return buf.getvalue()


def grid_configs(
    resource: ResourceSpec,
    shots: int,
    seed: int,
    tomography: bool = False,
    shots_per_setting: int = 10_000,
    mc_cycles: int = 100,
) -> list[ScenarioConfig]:
    """Every catalog state under the error settings the tables cover."""
    settings = [
        (ErrorTarget.NONE, pi / 2, Location.KNOWN),
        (ErrorTarget.QUBIT3, pi / 2, Location.KNOWN),
        (ErrorTarget.QUBIT2, pi / 2, Location.KNOWN),
        (ErrorTarget.BOTH, pi / 2, Location.UNKNOWN),
        (ErrorTarget.QUBIT3, pi / 4, Location.KNOWN),
        (ErrorTarget.QUBIT2, pi / 4, Location.KNOWN),
    ]
    child_seeds = np.random.SeedSequence(seed).generate_state(len(settings) * len(CATALOG_NAMES), np.uint64)
    out = []
    for k, ((target, angle, loc), name) in enumerate((s, n) for s in settings for n in CATALOG_NAMES):
        inp = catalog_state(name)
        out.append(
            ScenarioConfig(
                input=inp,
                input_form={"catalog": name},
                error=target,
                error_angle=angle,
                location=loc,
                resource=resource,
                shots=shots,
                tomography=tomography,
                shots_per_setting=shots_per_setting,
                mc_cycles=mc_cycles,
                seed=int(child_seeds[k]),
            )
        )
    return out


def emit_bloch_data(report: RunReport) -> list[dict]:
    """(label, x, y, z) records for plotting the ideal, pre- and post-recovery qubits."""
    records = [dict(zip(("label", "x", "y", "z"), ["ideal", *report.data["input"]["bloch_ideal"]]))]
    for s, row in report.data["syndromes"].items():
        for label, vec in (
            (f"pre_recovery {s}", row["bloch_pre_recovery"]),
            (f"post_recovery {s}", row["bloch_post_recovery"]),
            (f"reconstructed {s}", (row["tomography"] or {}).get("bloch")),
        ):
            if vec is not None:
                records.append({"label": label, "x": vec[0], "y": vec[1], "z": vec[2]})
    return records


def catalog_table() -> str:
    """The input-state catalog as CSV."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["state", "alpha", "beta", "eigen_operator", "theta_deg", "phi_deg", "listed_theta", "listed_phi"])
    for e in catalog_entries():
        i = e.input
        w.writerow([i.name, f"{i.alpha:.6f}", f"{i.beta:.6f}", e.eigen_operator,
                    f"{i.theta_deg:.3f}", f"{i.phi_deg:.3f}", *e.listed_angles])
    return buf.getvalue()

