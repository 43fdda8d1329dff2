from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..core import BudgetExhausted, ContractViolation, PriorSpec, Simulator, WeightedSample
from ..kernels import kernel_from_sample, perturb, pmc_weight
from ..sampling import weighted_indices
from ._common import Monitor, Run, rejection_fill, resolve_variant


def geometric_schedule(first: float, last: float, steps: int) -> list[float]:
    """``steps`` tolerances decreasing geometrically from ``first`` to ``last``."""
    if steps == 1:
        return [float(last)]
    return [float(x) for x in np.geomspace(first, last, steps)]


@dataclass
class PmcConfig:
    n: int = 1000
    schedule: Sequence[float] = field(default_factory=lambda: geometric_schedule(2.0, 0.01, 11))
    kernel: str = "auto"
    seed: int = 0

    def __post_init__(self):
        self.schedule = [float(e) for e in self.schedule]
        if self.n < 2:
            raise ContractViolation("PMC needs n >= 2")
        if not self.schedule or any(e <= 0 for e in self.schedule):
            raise ContractViolation("PMC schedule must be nonempty and positive")
        if any(b > a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ContractViolation("PMC schedule must be non-increasing")


def run_pmc(prior: PriorSpec, simulator: Simulator, config: PmcConfig, rng=None, *,
            workers: int = 1, budget: Optional[int] = None, monitor: Optional[Monitor] = None):
    """Population Monte Carlo ABC over a fixed tolerance schedule.

    Generation 1 is rejection sampling from the prior with weights ``1/N``.
    Each later generation refills ``N`` particles by picking a parent by
    weight, perturbing it with a Gaussian of twice the previous weighted
    variance and repeating until the distance beats the current tolerance.
    """
    run = Run("pmc", simulator, config.seed if rng is None else rng, workers, budget, monitor)
    variant = resolve_variant(config.kernel, prior.dim)
    n = config.n
    try:
        eps = config.schedule[0]
        theta, rho = rejection_fill(run, lambda size: prior.sample(size, run.rng), n, eps)
        sample = WeightedSample(theta, np.full(n, 1.0 / n), rho, eps, 1)
        run.record(1, eps, n / run.engine.n_sims, sample)
        for t, eps in enumerate(config.schedule[1:], start=2):
            kernel = kernel_from_sample(sample, variant)
            before = run.engine.n_sims
            prev = sample

            def propose(size: int) -> np.ndarray:
                parents = weighted_indices(prev.weights, size, run.rng)
                return perturb(prev.theta[parents], kernel, run.rng)

            theta, rho = rejection_fill(run, propose, n, eps, acceptance_hint=0.2)
            w = np.atleast_1d(pmc_weight(theta, prev, kernel, prior))
            if not w.sum() > 0:
                raise ContractViolation(f"PMC generation {t} has zero total weight")
            sample = WeightedSample(theta, w / w.sum(), rho, eps, t)
            run.record(t, eps, n / (run.engine.n_sims - before), sample)
    except (BudgetExhausted, ContractViolation) as err:
        raise run.fail(err)
    return run.finish(sample)
