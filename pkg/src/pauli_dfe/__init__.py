"""Direct fidelity estimation by sampling single Pauli strings or commuting groups."""

from .dfe import (
    MODES,
    SHOT_MODELS,
    DfeConfig,
    DfeResult,
    copies_grouped,
    copies_original,
    estimate_x_grouped,
    expected_copy_bound,
    importance_sample,
    round_moments,
    run_dfe,
)
from .experiments import (
    BatchConfig,
    ExperimentStats,
    read_results,
    run_batch,
    variance_comparison,
    write_results,
)
from .grouping import Grouping, PauliGroup, group_norms, singleton_grouping, sorted_insertion
from .measurement import MeasurementBasis, OutcomeSample, common_eigenbasis, sample_outcomes
from .pauli_core import Commutativity, PauliString, apply_pauli, commutes, expectation
from .states import (
    CoefficientTable,
    NoisyState,
    StateVector,
    make_state,
    outcome_probabilities,
    pauli_coefficients,
    true_fidelity,
)

__all__ = [
    "MODES", "SHOT_MODELS", "BatchConfig", "CoefficientTable", "Commutativity", "DfeConfig",
    "DfeResult", "ExperimentStats", "Grouping", "MeasurementBasis", "NoisyState",
    "OutcomeSample", "PauliGroup", "PauliString", "StateVector", "apply_pauli",
    "common_eigenbasis", "commutes", "copies_grouped", "copies_original",
    "estimate_x_grouped", "expectation", "expected_copy_bound", "group_norms",
    "importance_sample", "make_state", "outcome_probabilities", "pauli_coefficients",
    "read_results", "round_moments", "run_batch", "run_dfe", "sample_outcomes",
    "singleton_grouping", "sorted_insertion", "true_fidelity", "variance_comparison",
    "write_results",
]
