from __future__ import annotations

import math
import time
from typing import Callable, Optional

import numpy as np

from ..core import (
    DEFAULT_BUDGET,
    BudgetExhausted,
    ContractViolation,
    IterationRecord,
    RunTrace,
    SimulationEngine,
    Simulator,
    WeightedSample,
    as_streams,
    distinct_rows,
)
from ..kernels import MULTIVARIATE, UNIVARIATE

#: Called with the current population after every iteration; the returned
#: mapping is merged into that iteration's trace record (used for L2 curves).
Monitor = Callable[[WeightedSample], dict]


def n_alpha(alpha: float, n: int) -> int:
    # tolerance guards against 0.29 * 100 == 28.999999999999996
    return int(math.floor(alpha * n + 1e-9))


def resolve_variant(variant: Optional[str], dim: int) -> str:
    if variant in (None, "auto"):
        return MULTIVARIATE if dim > 1 else UNIVARIATE
    if variant not in (UNIVARIATE, MULTIVARIATE):
        raise ContractViolation(f"unknown kernel variant {variant!r}")
    return variant


def ess(weights) -> float:
    """Effective sample size ``1 / sum(W_i^2)`` of normalised weights."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if not total > 0:
        raise ContractViolation("ESS of weights with zero sum")
    p = w / total
    return float(1.0 / np.dot(p, p))


def p_acc(new_distances, epsilon_prev: float) -> float:
    """Fraction of freshly simulated distances strictly below the previous tolerance."""
    d = np.asarray(new_distances, dtype=float)
    if d.size == 0:
        raise ContractViolation("p_acc of an empty set of distances")
    return float(np.count_nonzero(d < epsilon_prev)) / d.size


class Run:
    """Bookkeeping shared by every sampler: engine, algorithm RNG, trace, clock."""

    def __init__(self, name: str, simulator: Simulator, rng, workers: int, budget: Optional[int],
                 monitor: Optional[Monitor]):
        self.streams = as_streams(rng)
        self.engine = SimulationEngine(simulator, self.streams, workers,
                                       DEFAULT_BUDGET if budget is None else budget)
        self.rng = self.streams.algorithm()
        self.trace = RunTrace(name)
        self.monitor = monitor
        self.t0 = time.perf_counter()

    def record(self, iteration: int, epsilon: float, acceptance: float, sample: WeightedSample,
               **extra) -> IterationRecord:
        rec = IterationRecord(
            iteration=iteration,
            epsilon=float(epsilon),
            acceptance=float(acceptance),
            n_sims=self.engine.n_sims,
            n_distinct=distinct_rows(sample.theta),
            ess=ess(sample.weights),
            wall_time=time.perf_counter() - self.t0,
            extra=dict(extra),
        )
        if self.monitor is not None:
            rec.extra.update(self.monitor(sample))
        self.trace.records.append(rec)
        return rec

    def warn(self, message: str) -> None:
        self.trace.warnings.append(message)

    def finish(self, sample: WeightedSample) -> tuple[WeightedSample, RunTrace]:
        self.engine.close()
        self.trace.final = sample
        return sample, self.trace

    def fail(self, err: BaseException) -> BaseException:
        self.engine.close()
        if hasattr(err, "trace") and err.trace is None:
            err.trace = self.trace
        return err


def rejection_fill(run: Run, propose: Callable[[int], np.ndarray], needed: int, epsilon: float,
                   acceptance_hint: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Propose-and-simulate until ``needed`` candidates have distance < ``epsilon``.

    Candidates are simulated in batches but charged as if drawn one at a
    time: simulations after the last required acceptance in the final batch
    are not counted. Returns ``(theta, distances)`` of the accepted ones.
    """
    thetas: list[np.ndarray] = []
    dists: list[np.ndarray] = []
    got = 0
    tried = 0
    rate = max(acceptance_hint, 1e-9)
    while got < needed:
        remaining = run.engine.remaining
        if remaining <= 0:
            raise BudgetExhausted(run.engine.budget)
        want = needed - got
        size = int(min(max(1.2 * want / rate + 64, 256), 2**21, remaining))
        cand = propose(size)
        rho = run.engine.simulate(cand, charge=False)
        hit = np.flatnonzero(rho < epsilon)
        tried += size
        if hit.size >= want:
            last = hit[want - 1]
            run.engine.charge(last + 1)
            thetas.append(cand[hit[:want]])
            dists.append(rho[hit[:want]])
            got = needed
        else:
            run.engine.charge(size)
            thetas.append(cand[hit])
            dists.append(rho[hit])
            got += hit.size
            rate = max((got + 1) / tried, 1e-9)
    return np.concatenate(thetas), np.concatenate(dists)
