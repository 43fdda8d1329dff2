from __future__ import annotations

from typing import Optional

import numpy as np

from ..core import BudgetExhausted, ContractViolation, PriorSpec, Simulator, WeightedSample
from ._common import Monitor, Run, rejection_fill


def run_rejection(prior: PriorSpec, simulator: Simulator, n: int, epsilon: float, rng=None, *,
                  workers: int = 1, budget: Optional[int] = None, monitor: Optional[Monitor] = None):
    """Plain rejection ABC: keep prior draws whose distance is below ``epsilon``.

    Returns ``(sample, trace)``; the sample has ``n`` particles of weight 1
    and the single trace record carries the total number of simulations.
    """
    if not epsilon > 0:
        raise ContractViolation("rejection ABC needs epsilon > 0")
    if n < 1:
        raise ContractViolation("rejection ABC needs n >= 1")
    run = Run("rejection", simulator, rng, workers, budget, monitor)
    try:
        theta, rho = rejection_fill(run, lambda size: prior.sample(size, run.rng), n, epsilon)
    except BudgetExhausted as err:
        raise run.fail(err)
    sample = WeightedSample(theta, np.ones(n), rho, epsilon, 1)
    run.record(1, epsilon, n / run.engine.n_sims, sample)
    return run.finish(sample)
