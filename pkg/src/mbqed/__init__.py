"""Simulation of a two-qubit phase-error detection code run by measurements on a four-qubit cluster."""
__version__ = "0.1.0"

from .cluster import box_cluster, graph_state, lab_cluster, lab_to_box, map_error_box_to_lab  # noqa: E402
from .code import (  # noqa: E402
    CATALOG_NAMES,
    ErrorSpec,
    ErrorTarget,
    Location,
    LogicalInput,
    Syndrome,
    branch_correction,
    catalog_state,
    catalog_states,
    outcome_distribution,
    recovery_lookup,
    run_ensemble,
    run_protocol,
)
from .noisetomo import (  # noqa: E402
    DensityMatrix,
    EstimateWithError,
    mix_white_noise,
    reconstruct,
    simulate_counts,
    tomography_fidelity,
)
from .scenario import ScenarioConfig, emit_table_reproduction, parse_config, run_scenario  # noqa: E402
from .statevec import StateVector, apply_cz, apply_single, measure  # noqa: E402

__all__ = [
    "__version__",
    "box_cluster",
    "graph_state",
    "lab_cluster",
    "lab_to_box",
    "map_error_box_to_lab",
    "CATALOG_NAMES",
    "ErrorSpec",
    "ErrorTarget",
    "Location",
    "LogicalInput",
    "Syndrome",
    "branch_correction",
    "catalog_state",
    "catalog_states",
    "outcome_distribution",
    "recovery_lookup",
    "run_ensemble",
    "run_protocol",
    "DensityMatrix",
    "EstimateWithError",
    "mix_white_noise",
    "reconstruct",
    "simulate_counts",
    "tomography_fidelity",
    "ScenarioConfig",
    "emit_table_reproduction",
    "parse_config",
    "run_scenario",
    "StateVector",
    "apply_cz",
    "apply_single",
    "measure",
]
