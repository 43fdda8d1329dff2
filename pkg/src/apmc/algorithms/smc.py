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
from ..sampling import weighted_indices
from ._common import Monitor, Run, ess, resolve_variant


@dataclass
class SmcConfig:
    """Settings for :func:`run_smc`.

    ``n_t`` is the ESS threshold below which particles are resampled;
    ``None`` means ``n // 2``.
    """

    n: int = 1000
    m: int = 1
    alpha: float = 0.95
    epsilon_target: float = 0.01
    n_t: Optional[int] = None
    kernel: str = "auto"
    seed: int = 0

    def __post_init__(self):
        if self.n_t is None:
            self.n_t = self.n // 2
        if self.m < 1:
            raise ContractViolation("M must be >= 1")
        if not 0 < self.alpha < 1:
            raise ContractViolation("alpha must lie in (0, 1)")
        if not 1 <= self.n_t <= self.n:
            raise ContractViolation("need 1 <= N_T <= N")
        if not self.epsilon_target > 0:
            raise ContractViolation("epsilon_target must be positive")


def _hits(x: np.ndarray, eps: float) -> np.ndarray:
    return np.count_nonzero(x < eps, axis=1)


def reweight(weights: np.ndarray, x: np.ndarray, eps: float, eps_prev: float) -> np.ndarray:
    """Unnormalised weights after lowering the tolerance from ``eps_prev`` to ``eps``.

    ``W_i * hits_i(eps) / hits_i(eps_prev)`` where ``hits_i`` counts the
    particle's stored simulations strictly below the tolerance; particles
    with no hits at ``eps_prev`` already carry zero weight and stay at zero.
    """
    num = _hits(x, eps)
    den = _hits(x, eps_prev)
    out = np.zeros_like(weights)
    ok = den > 0
    out[ok] = weights[ok] * num[ok] / den[ok]
    return out


def _ess_or_zero(w: np.ndarray) -> float:
    return ess(w) if w.sum() > 0 else 0.0


def solve_epsilon(weights: np.ndarray, x: np.ndarray, eps_prev: float, target_ess: float):
    """Smallest tolerance below ``eps_prev`` whose reweighted ESS reaches ``target_ess``.

    The ESS only changes at stored distances, so the search bisects over the
    sorted distinct distances of live particles. Returns ``(eps, bracketed)``;
    when no stored distance reaches the target the largest one below
    ``eps_prev`` is returned with ``bracketed=False``.
    """
    alive = weights > 0
    cand = np.unique(x[alive])
    cand = cand[cand < eps_prev]
    if cand.size == 0:
        return eps_prev, False
    lo, hi = -1, cand.size  # hi == cand.size stands for eps_prev itself
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _ess_or_zero(reweight(weights, x, cand[mid], eps_prev)) >= target_ess:
            hi = mid
        else:
            lo = mid
    if hi < cand.size:
        return float(cand[hi]), True
    return float(cand[-1]), False


def run_smc(prior: PriorSpec, simulator: Simulator, config: SmcConfig, rng=None, *,
            workers: int = 1, budget: Optional[int] = None, monitor: Optional[Monitor] = None):
    """Adaptive SMC ABC with ``M`` simulations per particle.

    Each iteration picks the tolerance that shrinks the ESS by the factor
    ``alpha``, resamples when the ESS falls below ``N_T`` and then applies
    one Metropolis-Hastings move to every live particle. Moves use a
    Gaussian with twice the weighted variance of the live particles.
    """
    run = Run("smc", simulator, config.seed if rng is None else rng, workers, budget, monitor)
    variant = resolve_variant(config.kernel, prior.dim)
    n, m = config.n, config.m

    def current_sample(theta, w, x, eps, t):
        alive = w > 0
        return WeightedSample(theta[alive], w[alive] / w[alive].sum(), x[alive].min(axis=1), eps, t)

    try:
        theta = prior.sample(n, run.rng)
        x = run.engine.simulate(np.repeat(theta, m, axis=0)).reshape(n, m)
        w = np.full(n, 1.0 / n)
        eps_prev = math.inf
        run.record(0, eps_prev, 1.0, current_sample(theta, w, x, eps_prev, 0), resampled=False, moves=0)
        t = 0
        while eps_prev > config.epsilon_target:
            t += 1
            eps, bracketed = solve_epsilon(w, x, eps_prev, config.alpha * ess(w))
            if not bracketed:
                run.warn(f"iteration {t}: ESS target not attainable; tolerance lowered to {eps:.6g}")
            if eps < config.epsilon_target:
                eps = config.epsilon_target
            w = reweight(w, x, eps, eps_prev)
            if not w.sum() > 0:
                raise StagnationError(f"iteration {t}: every particle lost its weight at epsilon={eps:.6g}")
            w = w / w.sum()

            resampled = ess(w) < config.n_t
            if resampled:
                idx = weighted_indices(w, n, run.rng)
                theta, x = theta[idx], x[idx]
                w = np.full(n, 1.0 / n)

            alive = np.flatnonzero(w > 0)
            kernel = kernel_from_sample(WeightedSample(theta[alive], w[alive], x[alive, 0]), variant)
            prop = perturb(theta[alive], kernel, run.rng)
            x_prop = run.engine.simulate(np.repeat(prop, m, axis=0)).reshape(alive.size, m)
            u = run.rng.random(alive.size)
            hits_prop = _hits(x_prop, eps)
            hits_cur = _hits(x[alive], eps)
            prior_prop = prior.density(prop)
            prior_cur = prior.density(theta[alive])
            # symmetric Gaussian kernel: K terms cancel
            ratio = (hits_prop * prior_prop) / (hits_cur * prior_cur)
            ok = (ratio > 0) & (u <= np.minimum(1.0, ratio))
            moved = alive[ok]
            theta[moved] = prop[ok]
            x[moved] = x_prop[ok]

            eps_prev = eps
            run.record(t, eps, ok.mean(), current_sample(theta, w, x, eps, t), resampled=bool(resampled),
                       moves=int(alive.size))
    except (BudgetExhausted, ContractViolation, StagnationError) as err:
        raise run.fail(err)
    return run.finish(current_sample(theta, w, x, eps_prev, t))
