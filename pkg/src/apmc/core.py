"""Domain types shared by all samplers: priors, particles, weighted samples,
run traces, the simulator abstraction and keyed random streams.

Parameter vectors are plain 1-d float arrays; populations are stored as
arrays (``theta`` of shape ``(n, d)``, ``weights`` and ``distances`` of shape
``(n,)``) rather than lists of objects. :class:`Particle` exists for the
occasions where a single particle is handed around.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

ParamVector = np.ndarray

#: Number of particles sharing one simulation random stream. Fixed so that
#: results do not depend on how a batch is split across workers.
BLOCK_SIZE = 4096

DEFAULT_BUDGET = 10**8


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class DegenerateKernelError(ContractViolation):
    """The weighted sample has zero spread in some dimension."""

    def __init__(self, dimension: int, message: str | None = None):
        self.dimension = dimension
        super().__init__(
            message
            or f"perturbation kernel is degenerate: zero weighted variance in dimension {dimension}"
        )


class BudgetExhausted(RuntimeError):
    """The run needed more simulations than its budget allows."""

    def __init__(self, budget: int, trace: "RunTrace | None" = None):
        self.budget = budget
        self.trace = trace
        super().__init__(f"simulation budget of {budget} exhausted")


class StagnationError(RuntimeError):
    """The sampler stopped making progress (e.g. repeated zero acceptance)."""

    def __init__(self, message: str, trace: "RunTrace | None" = None):
        self.trace = trace
        super().__init__(message)


# ---------------------------------------------------------------------------
# Prior
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PriorSpec:
    """Product of independent uniform distributions on a box.

    Parameters
    ----------
    bounds : sequence of (lower, upper)
        One interval per dimension; ``lower < upper`` is required.
    """

    bounds: np.ndarray

    def __init__(self, bounds):
        b = np.atleast_2d(np.asarray(bounds, dtype=float))
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] < 1:
            raise ContractViolation("bounds must be a list of (lower, upper) pairs")
        if not np.all(np.isfinite(b)):
            raise ContractViolation("prior bounds must be finite")
        if np.any(b[:, 0] >= b[:, 1]):
            raise ContractViolation("prior bounds require lower < upper in every dimension")
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def upper(self) -> np.ndarray:
        return self.bounds[:, 1]

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def contains(self, theta) -> np.ndarray:
        theta = _as_points(theta, self.dim)
        return np.all((theta >= self.lower) & (theta <= self.upper), axis=1)

    def density(self, theta):
        """Prior density at one point (returns float) or at each row of ``theta``."""
        single = np.ndim(theta) <= 1 and np.size(theta) == self.dim
        inside = self.contains(theta)
        dens = np.where(inside, 1.0 / self.volume, 0.0)
        return float(dens[0]) if single else dens

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ContractViolation("prior_sample needs n >= 1")
        u = rng.random((n, self.dim))
        return self.lower + u * (self.upper - self.lower)


def _as_points(theta, dim: int) -> np.ndarray:
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size == dim else arr.reshape(-1, 1)
    if arr.shape[1] != dim:
        raise ContractViolation(f"expected parameter dimension {dim}, got {arr.shape[1]}")
    return arr


def prior_density(prior: PriorSpec, theta) -> float:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.ndim != 1 or theta.size != prior.dim:
        raise ContractViolation(
            f"theta has dimension {theta.size}, prior has dimension {prior.dim}"
        )
    return prior.density(theta)


def prior_sample(prior: PriorSpec, n: int, rng: np.random.Generator) -> list[ParamVector]:
    return list(prior.sample(n, rng))


# ---------------------------------------------------------------------------
# Particles and samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Particle:
    theta: ParamVector
    weight: float
    distance: float

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if not np.all(np.isfinite(theta)):
            raise ContractViolation("particle parameters must be finite")
        if not (math.isfinite(self.weight) and self.weight >= 0):
            raise ContractViolation("particle weight must be finite and >= 0")
        if not (math.isfinite(self.distance) and self.distance >= 0):
            raise ContractViolation("particle distance must be finite and >= 0")
        object.__setattr__(self, "theta", theta)


@dataclass
class WeightedSample:
    """A population of particles at one tolerance level.

    Weights are kept on whatever scale the producing algorithm uses; call
    :meth:`normalized_weights` for probabilities.
    """

    theta: np.ndarray
    weights: np.ndarray
    distances: np.ndarray
    epsilon: float = math.inf
    iteration: int = 0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim == 1:
            theta = theta[:, None]
        self.theta = theta
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        self.distances = np.asarray(self.distances, dtype=float).reshape(-1)
        n = theta.shape[0]
        if self.weights.shape[0] != n or self.distances.shape[0] != n:
            raise ContractViolation("theta, weights and distances must have equal length")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ContractViolation("weights must be finite and nonnegative")

    @classmethod
    def from_particles(
        cls, particles: Sequence[Particle], epsilon: float = math.inf, iteration: int = 0
    ) -> "WeightedSample":
        theta = np.array([p.theta for p in particles], dtype=float)
        return cls(
            theta,
            [p.weight for p in particles],
            [p.distance for p in particles],
            epsilon,
            iteration,
        )

    def __len__(self) -> int:
        return self.theta.shape[0]

    @property
    def dim(self) -> int:
        return self.theta.shape[1]

    @property
    def particles(self) -> list[Particle]:
        return [
            Particle(t.copy(), float(w), float(r))
            for t, w, r in zip(self.theta, self.weights, self.distances)
        ]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def normalized_weights(self) -> np.ndarray:
        total = self.weights.sum()
        if not total > 0:
            raise ContractViolation("sample has zero total weight")
        return self.weights / total

    def subset(self, index) -> "WeightedSample":
        return WeightedSample(
            self.theta[index], self.weights[index], self.distances[index], self.epsilon, self.iteration
        )


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------


@dataclass
class IterationRecord:
    iteration: int
    epsilon: float
    acceptance: float
    n_sims: int
    n_distinct: int
    ess: float
    wall_time: float
    extra: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        out = {
            "iteration": self.iteration,
            "epsilon": self.epsilon,
            "acceptance": self.acceptance,
            "n_sims": self.n_sims,
            "n_distinct": self.n_distinct,
            "ess": self.ess,
            "wall_time": self.wall_time,
        }
        out.update(self.extra)
        return out


@dataclass
class RunTrace:
    algorithm: str
    records: list[IterationRecord] = field(default_factory=list)
    final: Optional[WeightedSample] = None
    warnings: list[str] = field(default_factory=list)

    @property
    def n_sims(self) -> int:
        return self.records[-1].n_sims if self.records else 0

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([r.epsilon for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([r.as_dict().get(name, np.nan) for r in self.records], dtype=float)


# ---------------------------------------------------------------------------
# Simulators and random streams
# ---------------------------------------------------------------------------


class Simulator:
    """Maps parameter vectors to distances between simulated and observed data.

    Subclasses implement :meth:`simulate`, which is vectorised over rows of
    ``theta`` and must draw all of its randomness from ``rng`` so that a
    fixed ``(theta, rng state)`` always yields the same distances.
    """

    dim: int = 1

    def simulate(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, theta, rng: np.random.Generator) -> float:
        point = np.atleast_1d(np.asarray(theta, dtype=float)).reshape(1, -1)
        return float(self.simulate(point, rng)[0])


class FunctionSimulator(Simulator):
    """Wrap a vectorised ``f(theta, rng) -> distances`` callable."""

    def __init__(self, fn: Callable[[np.ndarray, np.random.Generator], np.ndarray], dim: int = 1):
        self.fn = fn
        self.dim = dim

    def simulate(self, theta, rng):
        return np.asarray(self.fn(theta, rng), dtype=float)


class RandomStreams:
    """Counter-based (Philox) generators keyed by ``(seed, run_id, *key)``."""

    SIMULATION = 0
    ALGORITHM = 1

    def __init__(self, seed: int = 0, run_id: int = 0):
        self.seed = int(seed)
        self.run_id = int(run_id)

    def generator(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.run_id, *map(int, key)))
        return np.random.Generator(np.random.Philox(ss))

    def algorithm(self) -> np.random.Generator:
        return self.generator(self.ALGORITHM)

    def simulation(self, batch: int, block: int) -> np.random.Generator:
        return self.generator(self.SIMULATION, batch, block)


def as_streams(rng) -> RandomStreams:
    if isinstance(rng, RandomStreams):
        return rng
    if rng is None:
        return RandomStreams(0)
    return RandomStreams(int(rng))


class SimulationEngine:
    """Runs simulator batches, counts simulations and enforces the budget.

    Each call to :meth:`simulate` is one batch with its own key; the batch is
    cut into fixed blocks of :data:`BLOCK_SIZE` particles, each with its own
    stream, and blocks are fanned out to a thread pool. The output therefore
    depends only on the batch sequence, never on ``workers``.
    """

    def __init__(self, simulator: Simulator, streams: RandomStreams, workers: int = 1,
                 budget: int = DEFAULT_BUDGET):
        self.simulator = simulator
        self.streams = streams
        self.workers = max(1, int(workers))
        self.budget = int(budget)
        self.n_sims = 0
        self._batch = 0
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    @property
    def remaining(self) -> int:
        return self.budget - self.n_sims

    def charge(self, k: int) -> None:
        if self.n_sims + k > self.budget:
            self.n_sims = self.budget
            raise BudgetExhausted(self.budget)
        self.n_sims += int(k)

    def simulate(self, theta: np.ndarray, charge: bool = True) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 1:
            theta = theta[:, None]
        n = theta.shape[0]
        if charge:
            self.charge(n)
        batch = self._batch
        self._batch += 1
        starts = range(0, n, BLOCK_SIZE)

        def run_block(start: int) -> np.ndarray:
            rng = self.streams.simulation(batch, start // BLOCK_SIZE)
            return np.asarray(self.simulator.simulate(theta[start:start + BLOCK_SIZE], rng), dtype=float)

        if self._pool is None or n <= BLOCK_SIZE:
            parts: Iterable[np.ndarray] = [run_block(s) for s in starts]
        else:
            parts = list(self._pool.map(run_block, starts))
        out = np.concatenate(list(parts)) if n else np.empty(0)
        if np.any(out < 0) or not np.all(np.isfinite(out)):
            raise ContractViolation("simulator returned a negative or non-finite distance")
        return out


def distinct_rows(theta: np.ndarray) -> int:
    theta = np.ascontiguousarray(theta)
    if theta.shape[0] == 0:
        return 0
    return int(np.unique(theta, axis=0).shape[0])
