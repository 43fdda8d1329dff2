"""Posterior-quality and degeneracy diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .core import ContractViolation, PriorSpec, WeightedSample, distinct_rows


@dataclass(frozen=True)
class GridSpec:
    """Regular grid over a box: ``bins[k]`` equal cells along dimension ``k``."""

    bounds: np.ndarray
    bins: tuple[int, ...]

    def __init__(self, bounds, bins):
        b = np.atleast_2d(np.asarray(bounds, dtype=float))
        bins = (int(bins),) * b.shape[0] if np.ndim(bins) == 0 else tuple(int(k) for k in bins)
        if len(bins) != b.shape[0] or min(bins) < 1:
            raise ContractViolation("need one positive bin count per dimension")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "bins", bins)

    @classmethod
    def for_prior(cls, prior: PriorSpec, bins) -> "GridSpec":
        return cls(prior.bounds, bins)

    @property
    def dim(self) -> int:
        return len(self.bins)

    @property
    def edges(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, k + 1) for (lo, hi), k in zip(self.bounds, self.bins)]

    @property
    def widths(self) -> np.ndarray:
        return (self.bounds[:, 1] - self.bounds[:, 0]) / np.array(self.bins)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def centers(self) -> list[np.ndarray]:
        return [0.5 * (e[1:] + e[:-1]) for e in self.edges]


@dataclass
class HistogramGrid:
    """Density per unit volume on each cell of ``grid``."""

    grid: GridSpec
    values: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)


def weighted_histogram(sample: WeightedSample, grid: GridSpec) -> HistogramGrid:
    """Normalised weighted histogram; every particle must lie inside the grid box."""
    theta = sample.theta
    if theta.shape[1] != grid.dim:
        raise ContractViolation("sample and grid dimensions differ")
    lo, hi = grid.bounds[:, 0], grid.bounds[:, 1]
    if np.any(theta < lo) or np.any(theta > hi):
        raise ContractViolation("particle outside the histogram box")
    w = sample.normalized_weights()
    counts, _ = np.histogramdd(theta, bins=grid.edges, weights=w)
    return HistogramGrid(grid, counts / grid.cell_volume)


def cell_averages(density: Callable, grid: GridSpec, subpoints: int = 32) -> np.ndarray:
    """Average of ``density`` over every cell by the midpoint rule with
    ``subpoints`` nodes per cell per dimension."""
    axes = []
    for (lo, hi), k in zip(grid.bounds, grid.bins):
        h = (hi - lo) / (k * subpoints)
        axes.append(lo + h * (np.arange(k * subpoints) + 0.5))
    if grid.dim == 1:
        vals = np.asarray(density(axes[0]), dtype=float)
    else:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.asarray(density(pts), dtype=float).reshape(mesh[0].shape)
    shape = []
    for k in grid.bins:
        shape += [k, subpoints]
    vals = vals.reshape(shape)
    return vals.mean(axis=tuple(range(1, 2 * grid.dim, 2)))


Reference = Union[Callable, HistogramGrid, np.ndarray]


def l2_distance(h: HistogramGrid, exact: Reference, subpoints: int = 32) -> float:
    """Discretised L2 distance ``sqrt(sum_cells (h - exact)^2 * cell_volume)``.

    ``exact`` may be a density callable (reduced to cell averages), another
    histogram on the same grid, or an array of cell values.
    """
    if isinstance(exact, HistogramGrid):
        if exact.grid.bins != h.grid.bins or not np.allclose(exact.grid.bounds, h.grid.bounds):
            raise ContractViolation("histograms are on different grids")
        ref = exact.values
    elif callable(exact):
        ref = cell_averages(exact, h.grid, subpoints)
    else:
        ref = np.asarray(exact, dtype=float)
    if ref.shape != h.values.shape:
        raise ContractViolation("reference does not match the histogram grid")
    return float(np.sqrt(np.sum(np.square(h.values - ref)) * h.grid.cell_volume))


class L2Monitor:
    """Callable recording the L2 distance of each iteration's population;
    the reference cell averages are computed once."""

    def __init__(self, grid: GridSpec, exact: Reference, subpoints: int = 32):
        self.grid = grid
        if isinstance(exact, HistogramGrid):
            self.reference = exact.values
        elif callable(exact):
            self.reference = cell_averages(exact, grid, subpoints)
        else:
            self.reference = np.asarray(exact, dtype=float)

    def __call__(self, sample: WeightedSample) -> dict:
        h = weighted_histogram(positive_part(sample), self.grid)
        return {"l2": l2_distance(h, self.reference)}


def positive_part(sample: WeightedSample) -> WeightedSample:
    """Particles with positive weight; zero-weight proposals may sit outside the prior box."""
    return sample.subset(sample.weights > 0)


def pair_density_grids(sample: WeightedSample, grid: GridSpec) -> dict[tuple[int, int], np.ndarray]:
    """Bivariate marginal density on every pair of grid dimensions.

    Keys are ``(i, j)`` with ``i < j``; each value has shape
    ``(bins[i], bins[j])`` and integrates to 1 over its two axes.
    """
    h = weighted_histogram(sample, grid)
    out = {}
    for i in range(grid.dim):
        for j in range(i + 1, grid.dim):
            others = tuple(k for k in range(grid.dim) if k not in (i, j))
            other_width = float(np.prod(grid.widths[list(others)])) if others else 1.0
            out[(i, j)] = h.values.sum(axis=others) * other_width
    return out


def distinct_count(sample: WeightedSample) -> int:
    """Number of bitwise-distinct parameter vectors in the sample."""
    return distinct_rows(sample.theta)


def efficiency_criterion(n_sims: int, l2: float) -> float:
    """Simulations times squared L2 distance; lower is better."""
    if n_sims < 1:
        raise ContractViolation("n_sims must be >= 1")
    return n_sims * l2 * l2


def summarize(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ContractViolation("cannot summarize an empty list")
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return float(v.mean()), sd
