from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import (
    BudgetExhausted,
    ContractViolation,
    PriorSpec,
    Simulator,
    StagnationError,
    WeightedSample,
)
from ..kernels import kernel_from_sample, perturb
from ._common import Monitor, Run, n_alpha, rejection_fill, resolve_variant

STAGNATION_LIMIT = 3


def next_trial_count(p_acc: float, c: float) -> int:
    """MH trials needed so a particle moves with probability ``1 - c``.

    ``ceil(log c / log(1 - p_acc))``, floored at 1 (``p_acc = 1`` gives 0).
    Undefined for ``p_acc = 0``.
    """
    if not 0 < p_acc <= 1:
        raise ContractViolation("trial count is undefined for p_acc outside (0, 1]")
    if p_acc == 1:
        return 1
    return max(1, math.ceil(math.log(c) / math.log(1 - p_acc)))


@dataclass
class RsmcConfig:
    """Settings for :func:`run_rsmc`. ``alpha`` is the fraction of particles
    dropped and replenished each round."""

    n: int = 1000
    alpha: float = 0.5
    epsilon_initial: float = math.inf
    epsilon_target: float = 0.01
    c: float = 0.01
    r_initial: int = 10
    kernel: str = "auto"
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ContractViolation("alpha must lie in (0, 1)")
        if not 0 < self.c < 1:
            raise ContractViolation("c must lie in (0, 1)")
        if self.r_initial < 1:
            raise ContractViolation("initial R must be >= 1")
        if not 0 < self.epsilon_target <= self.epsilon_initial:
            raise ContractViolation("need 0 < epsilon_target <= epsilon_initial")
        if not 1 <= n_alpha(self.alpha, self.n) < self.n:
            raise ContractViolation("need 1 <= floor(alpha * n) < n")


def run_rsmc(prior: PriorSpec, simulator: Simulator, config: RsmcConfig, rng=None, *,
             workers: int = 1, budget: Optional[int] = None, monitor: Optional[Monitor] = None):
    """Replenishment SMC ABC.

    Each round drops the ``N_alpha`` particles with the largest distances,
    sets the next tolerance to the largest remaining distance, refills by
    copying random survivors and applies ``R`` Metropolis-Hastings trials to
    every copy. ``R`` is re-derived from the round's acceptance rate.
    Weights stay uniform throughout.
    """
    run = Run("rsmc", simulator, config.seed if rng is None else rng, workers, budget, monitor)
    variant = resolve_variant(config.kernel, prior.dim)
    n, drop = config.n, n_alpha(config.alpha, config.n)
    r_trials = config.r_initial
    stagnant = 0
    try:
        # initial draws accept rho <= epsilon_initial
        init_eps = np.nextafter(config.epsilon_initial, np.inf)
        theta, rho = rejection_fill(run, lambda size: prior.sample(size, run.rng), n, init_eps)
        order = np.argsort(rho, kind="stable")
        theta, rho = theta[order], rho[order]
        eps_max = float(rho[-1])
        run.record(0, eps_max, 1.0, WeightedSample(theta, np.ones(n), rho, eps_max, 0),
                   r_trials=r_trials, r_next=r_trials)
        t = 0
        while eps_max > config.epsilon_target:
            t += 1
            eps_next = float(rho[n - drop - 1])
            if eps_next < config.epsilon_target:
                eps_next = config.epsilon_target
            n_keep = max(n - drop, int(np.searchsorted(rho, eps_next, side="right")))
            n_new = n - n_keep
            survivors = WeightedSample(theta[:n_keep], np.ones(n_keep), rho[:n_keep], eps_next, t)
            kernel = kernel_from_sample(survivors, variant)

            pick = run.rng.integers(0, n_keep, n_new)
            cur_theta = theta[pick].copy()
            cur_rho = rho[pick].copy()
            cur_prior = prior.density(cur_theta)
            accepted = 0
            for _ in range(r_trials):
                prop = perturb(cur_theta, kernel, run.rng)
                prop_rho = run.engine.simulate(prop)
                prop_prior = prior.density(prop)
                u = run.rng.random(n_new)
                # symmetric Gaussian proposal: q terms cancel; current particles have prior > 0
                ratio = prop_prior / cur_prior
                ok = (u <= np.minimum(1.0, ratio)) & (prop_rho <= eps_next) & (prop_prior > 0)
                cur_theta[ok] = prop[ok]
                cur_rho[ok] = prop_rho[ok]
                cur_prior[ok] = prop_prior[ok]
                accepted += int(ok.sum())

            theta = np.concatenate([theta[:n_keep], cur_theta])
            rho = np.concatenate([rho[:n_keep], cur_rho])
            order = np.argsort(rho, kind="stable")
            theta, rho = theta[order], rho[order]
            eps_max = float(rho[-1])

            acc = accepted / (r_trials * n_new)
            r_used = r_trials
            if accepted == 0:
                stagnant += 1
                run.warn(f"round {t}: no MH move accepted; R kept at {r_trials}")
            else:
                stagnant = 0
                r_trials = next_trial_count(acc, config.c)
            sample = WeightedSample(theta, np.ones(n), rho, eps_next, t)
            run.record(t, eps_next, acc, sample, r_trials=r_used, r_next=r_trials,
                       stagnant=accepted == 0)
            if stagnant >= STAGNATION_LIMIT:
                raise StagnationError(
                    f"RSMC stalled: {STAGNATION_LIMIT} consecutive rounds without an accepted move "
                    f"at epsilon={eps_next:.6g}"
                )
    except (BudgetExhausted, ContractViolation, StagnationError) as err:
        raise run.fail(err)
    return run.finish(WeightedSample(theta, np.ones(n), rho, eps_max, t))
