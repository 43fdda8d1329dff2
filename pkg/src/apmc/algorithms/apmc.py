from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import BudgetExhausted, ContractViolation, PriorSpec, Simulator, WeightedSample
from ..kernels import WeightUnderflowWarning, apmc_weight, kernel_from_sample, perturb
from ..sampling import alpha_quantile, latin_hypercube, select_survivors, weighted_indices
from ._common import Monitor, Run, n_alpha, p_acc, resolve_variant


@dataclass
class ApmcConfig:
    """Settings for :func:`run_apmc`.

    ``init`` chooses the first prior sample: ``"iid"``, ``"lhs"`` or
    ``"auto"`` (Latin hypercube when the prior has more than one dimension).
    """

    n: int = 1000
    alpha: float = 0.5
    p_acc_min: float = 0.01
    kernel: str = "auto"
    init: str = "auto"
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ContractViolation("alpha must lie in (0, 1)")
        if not 0 <= self.p_acc_min < 1:
            raise ContractViolation("p_acc_min must lie in [0, 1)")
        if not 1 <= n_alpha(self.alpha, self.n) < self.n:
            raise ContractViolation("need 1 <= floor(alpha * n) < n")
        if self.init not in ("auto", "iid", "lhs"):
            raise ContractViolation(f"unknown init {self.init!r}")

    @property
    def n_alpha(self) -> int:
        return n_alpha(self.alpha, self.n)


def run_apmc(prior: PriorSpec, simulator: Simulator, config: ApmcConfig, rng=None, *,
             workers: int = 1, budget: Optional[int] = None, monitor: Optional[Monitor] = None):
    """Adaptive population Monte Carlo ABC.

    Each iteration proposes ``N - N_alpha`` particles around the current
    ``N_alpha`` survivors, weights them by prior over proposal density,
    pools them with the survivors and keeps the ``N_alpha`` closest. The
    tolerance is the ``N_alpha``-th smallest pooled distance, so it can
    never increase. The run stops once the share of new particles beating
    the previous tolerance is at most ``p_acc_min``.

    Returns ``(sample, trace)`` where ``sample`` holds the final
    ``N_alpha`` particles with their unnormalised weights.
    """
    run = Run("apmc", simulator, config.seed if rng is None else rng, workers, budget, monitor)
    variant = resolve_variant(config.kernel, prior.dim)
    n, keep = config.n, config.n_alpha
    level = keep / n
    use_lhs = config.init == "lhs" or (config.init == "auto" and prior.dim > 1)
    try:
        theta = latin_hypercube(prior, n, run.rng) if use_lhs else prior.sample(n, run.rng)
        rho = run.engine.simulate(theta)
        eps = alpha_quantile(rho, level)
        idx = select_survivors(rho, eps, keep)
        sample = WeightedSample(theta[idx], np.ones(keep), rho[idx], eps, 1)
        acc = 1.0
        run.record(1, eps, acc, sample, n_underflow=0)
        t = 1
        while acc > config.p_acc_min:
            t += 1
            kernel = kernel_from_sample(sample, variant)
            parents = weighted_indices(sample.weights, n - keep, run.rng)
            new_theta = perturb(sample.theta[parents], kernel, run.rng)
            new_rho = run.engine.simulate(new_theta)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", WeightUnderflowWarning)
                new_w = np.atleast_1d(apmc_weight(new_theta, sample, kernel, prior))
            for w in caught:
                run.warn(f"iteration {t}: {w.message}")
            acc = p_acc(new_rho, eps)
            pool_theta = np.concatenate([sample.theta, new_theta])
            pool_w = np.concatenate([sample.weights, new_w])
            pool_rho = np.concatenate([sample.distances, new_rho])
            eps = alpha_quantile(pool_rho, level)
            idx = select_survivors(pool_rho, eps, keep)
            sample = WeightedSample(pool_theta[idx], pool_w[idx], pool_rho[idx], eps, t)
            if not sample.total_weight > 0:
                raise ContractViolation(f"iteration {t}: all surviving weights are zero")
            underflow = np.count_nonzero((new_w == 0) & (prior.density(new_theta) > 0))
            run.record(t, eps, acc, sample, n_underflow=int(underflow))
    except (BudgetExhausted, ContractViolation) as err:
        raise run.fail(err)
    return run.finish(sample)
