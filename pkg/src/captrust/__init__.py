"""Capability-based bi-directional trust: natural trust for human trustors,
artificial trust for robot trustors, and the tools to fit and simulate both."""

__version__ = "0.1.0"

from captrust.core import (  # noqa: E402
    AgentId,
    CapabilityVector,
    DimensionError,
    OutcomeRecord,
    Role,
    TaskSpec,
    TrustParams,
    trust_given_capability,
    trust_integral,
)
from captrust.belief import UniformBelief, init_belief, update_belief  # noqa: E402
from captrust.artificial import (  # noqa: E402
    EmpiricalTrustGrid,
    accumulate_outcome,
    artificial_trust,
    fit_capability_bounds,
    psi,
    tau_hat,
)
from captrust.fitting import (  # noqa: E402
    TrialRecord,
    baseline_opt_predict,
    cross_entropy_loss,
    cross_validate,
    evaluate_models,
    fit_params,
    predict_trust,
)
from captrust.sim import SimConfig, SyntheticAgent, allocate_task, run_identification  # noqa: E402
from captrust.data import DatasetFile, generate_synthetic_dataset, load_dataset, save_dataset  # noqa: E402

__all__ = [
    "AgentId", "CapabilityVector", "DimensionError", "OutcomeRecord", "Role", "TaskSpec", "TrustParams",
    "trust_given_capability", "trust_integral", "UniformBelief", "init_belief", "update_belief",
    "EmpiricalTrustGrid", "accumulate_outcome", "artificial_trust", "fit_capability_bounds", "psi", "tau_hat",
    "TrialRecord", "baseline_opt_predict", "cross_entropy_loss", "cross_validate", "evaluate_models",
    "fit_params", "predict_trust", "SimConfig", "SyntheticAgent", "allocate_task", "run_identification",
    "DatasetFile", "generate_synthetic_dataset", "load_dataset", "save_dataset",
]
