"""The five ABC samplers. Every runner returns ``(WeightedSample, RunTrace)``."""

from ._common import ess, n_alpha, p_acc
from .apmc import ApmcConfig, run_apmc
from .pmc import PmcConfig, geometric_schedule, run_pmc
from .rejection import run_rejection
from .rsmc import RsmcConfig, next_trial_count, run_rsmc
from .smc import SmcConfig, reweight, run_smc, solve_epsilon

__all__ = [
    "ApmcConfig",
    "PmcConfig",
    "RsmcConfig",
    "SmcConfig",
    "ess",
    "geometric_schedule",
    "n_alpha",
    "next_trial_count",
    "p_acc",
    "reweight",
    "run_apmc",
    "run_pmc",
    "run_rejection",
    "run_rsmc",
    "run_smc",
    "solve_epsilon",
]
