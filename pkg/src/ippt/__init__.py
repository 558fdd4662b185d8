"""Interferometric PPT entanglement detection: exact, sampled and variational."""

from .bsm import (
    BellOutcome,
    ShotRecord,
    VisibilityModel,
    apply_visibility,
    bell_distribution,
    estimate_ippt,
    estimator_weight,
    exact_estimate,
    sample_shots,
)
from .circuits import NoiseModel, ParamCircuit, apply, apply_noisy, build_ansatz, parameter_shift_gradient
from .detection import (
    DetectionReport,
    choi_witness_value,
    detect,
    exact_ppt,
    fidelity_ew_value,
    ippt_value,
    ippt_value_via_observable,
    minimize_fidelity_ew,
    minimize_ippt,
    purity_criterion,
)
from .harness import EnsembleStudyConfig, SweepConfig, ensemble_study, ew_min_search, theta_sweep
from .optimize import OptimizerConfig
from .qmath import Bipartition, partial_trace, partial_transpose, random_induced_mixed, rng_stream
from .states import (
    DensityMatrix,
    PureState,
    StateError,
    TargetStateParams,
    ghz,
    load_state,
    paper_target_state,
    random_separable,
    reference_state,
    save_state,
    werner,
)

__version__ = "0.1.0"

__all__ = [
    "BellOutcome",
    "ShotRecord",
    "VisibilityModel",
    "apply_visibility",
    "bell_distribution",
    "estimate_ippt",
    "estimator_weight",
    "exact_estimate",
    "sample_shots",
    "NoiseModel",
    "ParamCircuit",
    "apply",
    "apply_noisy",
    "build_ansatz",
    "parameter_shift_gradient",
    "DetectionReport",
    "choi_witness_value",
    "detect",
    "exact_ppt",
    "fidelity_ew_value",
    "ippt_value",
    "ippt_value_via_observable",
    "minimize_fidelity_ew",
    "minimize_ippt",
    "purity_criterion",
    "EnsembleStudyConfig",
    "SweepConfig",
    "ensemble_study",
    "ew_min_search",
    "theta_sweep",
    "OptimizerConfig",
    "Bipartition",
    "partial_trace",
    "partial_transpose",
    "random_induced_mixed",
    "rng_stream",
    "DensityMatrix",
    "PureState",
    "StateError",
    "TargetStateParams",
    "ghz",
    "load_state",
    "paper_target_state",
    "random_separable",
    "reference_state",
    "save_state",
    "werner",
]
