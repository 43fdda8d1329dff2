"""Sequential ABC samplers: adaptive population Monte Carlo (APMC) and the
rejection, PMC, replenishment SMC and adaptive SMC baselines, with models,
diagnostics and a benchmark harness."""

from .algorithms import (
    ApmcConfig,
    PmcConfig,
    RsmcConfig,
    SmcConfig,
    run_apmc,
    run_pmc,
    run_rejection,
    run_rsmc,
    run_smc,
)
from .core import (
    BudgetExhausted,
    ContractViolation,
    DegenerateKernelError,
    FunctionSimulator,
    Particle,
    PriorSpec,
    RandomStreams,
    RunTrace,
    Simulator,
    StagnationError,
    WeightedSample,
)
from .metrics import GridSpec, L2Monitor, distinct_count, efficiency_criterion, l2_distance, weighted_histogram
from .models import SyntheticMultiStatModel, ToyModel, get_model

__version__ = "0.1.0"

__all__ = [
    "ApmcConfig",
    "BudgetExhausted",
    "ContractViolation",
    "DegenerateKernelError",
    "FunctionSimulator",
    "GridSpec",
    "L2Monitor",
    "Particle",
    "PmcConfig",
    "PriorSpec",
    "RandomStreams",
    "RsmcConfig",
    "RunTrace",
    "Simulator",
    "SmcConfig",
    "StagnationError",
    "SyntheticMultiStatModel",
    "ToyModel",
    "WeightedSample",
    "distinct_count",
    "efficiency_criterion",
    "get_model",
    "l2_distance",
    "run_apmc",
    "run_pmc",
    "run_rejection",
    "run_rsmc",
    "run_smc",
    "weighted_histogram",
]
