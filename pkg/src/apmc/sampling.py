"""Randomised primitives: Latin hypercube designs, weighted picks and
multinomial resampling, and the inf-of-multiset quantile."""

from __future__ import annotations

import numpy as np

from .core import ContractViolation, Particle, PriorSpec, WeightedSample


def latin_hypercube_unit(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points in ``[0, 1)^d`` with one point per stratum in every dimension."""
    if n < 1:
        raise ContractViolation("latin_hypercube needs n >= 1")
    strata = np.argsort(rng.random((d, n)), axis=1).T  # independent permutation per column
    return (strata + rng.random((n, d))) / n


def latin_hypercube(prior: PriorSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube sample of size ``n`` over the prior box, shape ``(n, d)``."""
    u = latin_hypercube_unit(n, prior.dim, rng)
    return prior.lower + u * (prior.upper - prior.lower)


def alpha_quantile(values, alpha: float) -> float:
    """Smallest element ``x`` of ``values`` whose empirical CDF reaches ``alpha``.

    This is ``inf{x in X : F(x) >= alpha}`` with ``F(x) = #{x_k <= x} / n``; the
    result is always one of the inputs, never an interpolated value.
    """
    v = np.sort(np.asarray(values, dtype=float).reshape(-1))
    n = v.size
    if n == 0:
        raise ContractViolation("alpha_quantile of an empty set")
    if not np.all(np.isfinite(v)):
        raise ContractViolation("alpha_quantile needs finite values")
    if not 0 < alpha <= 1:
        raise ContractViolation("alpha must lie in (0, 1]")
    cdf = np.arange(1, n + 1) / n
    k = int(np.searchsorted(cdf, alpha, side="left"))
    return float(v[min(k, n - 1)])


def select_survivors(distances, epsilon: float, keep: int) -> np.ndarray:
    """Indices of at most ``keep`` particles with ``distance <= epsilon``.

    Ties at the boundary are broken by input order (stable sort).
    """
    d = np.asarray(distances, dtype=float)
    order = np.argsort(d, kind="stable")
    below = order[d[order] <= epsilon]
    return np.sort(below[:keep])


def _probabilities(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if not total > 0:
        raise ContractViolation("cannot pick from a sample with zero total weight")
    return w / total


def weighted_indices(weights, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` indices with replacement, probability proportional to weight."""
    p = _probabilities(weights)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(idx, len(p) - 1)


def weighted_pick(sample: WeightedSample, rng: np.random.Generator) -> Particle:
    i = int(weighted_indices(sample.weights, 1, rng)[0])
    return Particle(sample.theta[i].copy(), float(sample.weights[i]), float(sample.distances[i]))


def multinomial_resample(sample: WeightedSample, n: int, rng: np.random.Generator) -> WeightedSample:
    """Multinomial resampling to ``n`` equally weighted particles (weights ``1/n``)."""
    idx = weighted_indices(sample.weights, n, rng)
    return WeightedSample(
        sample.theta[idx], np.full(n, 1.0 / n), sample.distances[idx], sample.epsilon, sample.iteration
    )


def systematic_indices(weights, size: int, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling; an optional lower-variance alternative to multinomial."""
    p = _probabilities(weights)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = (rng.random() + np.arange(size)) / size
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(p) - 1)
