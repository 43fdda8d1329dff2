"""Execute plans and persist rows and traces.

Output directory layout:

``results.csv``
    One row per run, columns in :func:`result_columns` order. Contains no
    wall-clock data, so identical plans give byte-identical files.
``timings.csv``
    ``run_id, wall_time`` (seconds).
``traces.jsonl``
    One JSON object per iteration record, tagged with ``run_id``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from ..core import BudgetExhausted, RandomStreams, StagnationError
from ..metrics import (
    GridSpec,
    L2Monitor,
    cell_averages,
    efficiency_criterion,
    l2_distance,
    positive_part,
    weighted_histogram,
)
from ..models import ModelEntry, get_model
from .plan import ExperimentPlan, UnsupportedOperation, cell_seed, get_algorithm

log = logging.getLogger(__name__)

RESULTS_FILE = "results.csv"
TIMINGS_FILE = "timings.csv"
TRACES_FILE = "traces.jsonl"

HEAD_COLUMNS = ["run_id", "model", "algorithm", "cell", "replicate", "seed", "status"]
TAIL_COLUMNS = ["n_sims", "final_epsilon", "iterations", "n_particles", "l2", "criterion"]

OK = "ok"
BUDGET_EXHAUSTED = "budget_exhausted"
STAGNATED = "stagnated"


def result_columns(algorithm: str) -> list[str]:
    """Fixed column order: identifiers, the algorithm's config fields in
    declaration order, then outcomes."""
    return HEAD_COLUMNS + get_algorithm(algorithm).config_fields + TAIL_COLUMNS


@dataclass
class ResultRow:
    run_id: str
    model: str
    algorithm: str
    cell: int
    replicate: int
    seed: int
    status: str
    config: dict[str, Any]
    n_sims: int
    final_epsilon: float = math.nan
    iterations: int = 0
    n_particles: int = 0
    l2: float = math.nan
    criterion: float = math.nan
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == OK

    def as_record(self) -> dict[str, str]:
        out = {k: _fmt(getattr(self, k)) for k in HEAD_COLUMNS + TAIL_COLUMNS}
        out.update({k: _fmt(v) for k, v in self.config.items()})
        return out

    @classmethod
    def from_record(cls, rec: dict[str, str]) -> "ResultRow":
        entry = get_algorithm(rec["algorithm"])
        config = {k: _parse(rec[k]) for k in entry.config_fields if k in rec}
        return cls(
            run_id=rec["run_id"], model=rec["model"], algorithm=rec["algorithm"],
            cell=int(rec["cell"]), replicate=int(rec["replicate"]), seed=int(rec["seed"]),
            status=rec["status"], config=config, n_sims=int(rec["n_sims"]),
            final_epsilon=float(rec["final_epsilon"]), iterations=int(rec["iterations"]),
            n_particles=int(rec["n_particles"]), l2=float(rec["l2"]), criterion=float(rec["criterion"]),
        )


def _fmt(value) -> str:
    # repr round-trips floats exactly; lists are ';'-joined
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt(v) for v in value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _parse(text: str):
    if ";" in text:
        return [_parse(t) for t in text.split(";")]
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


@lru_cache(maxsize=None)
def _model(name: str) -> ModelEntry:
    return get_model(name)


@lru_cache(maxsize=None)
def _l2_monitor(name: str) -> Optional[L2Monitor]:
    entry = _model(name)
    if entry.exact_density is None:
        return None
    return L2Monitor(GridSpec.for_prior(entry.prior, entry.bins), entry.exact_density)


@dataclass
class Job:
    run_id: str
    model: str
    algorithm: str
    cell: int
    replicate: int
    seed: int
    config: dict[str, Any]
    budget: int
    workers: int = 1
    trace_l2: bool = True


@dataclass
class JobResult:
    row: ResultRow
    trace: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def execute(job: Job) -> JobResult:
    """Run one ``(config, replicate)`` cell. Safe to call in a worker process."""
    entry = _model(job.model)
    algo = get_algorithm(job.algorithm)
    config = algo.make_config(dict(job.config))
    monitor = _l2_monitor(job.model) if job.trace_l2 else None
    streams = RandomStreams(job.seed)
    resolved = {k: getattr(config, k) for k in algo.config_fields}
    row = ResultRow(job.run_id, job.model, job.algorithm, job.cell, job.replicate, job.seed, OK,
                    resolved, n_sims=0)
    t0 = time.perf_counter()
    trace = None
    try:
        sample, trace = algo.runner(entry.prior, entry.simulator, config, streams,
                                    workers=job.workers, budget=job.budget, monitor=monitor)
    except BudgetExhausted as err:
        row.status, trace = BUDGET_EXHAUSTED, err.trace
        row.n_sims = job.budget
    except StagnationError as err:
        row.status, trace = STAGNATED, err.trace
        row.n_sims = trace.n_sims if trace is not None else 0
    else:
        row.n_sims = trace.n_sims
        row.final_epsilon = float(sample.epsilon)
        row.iterations = len(trace.records)
        row.n_particles = len(sample)
        if entry.exact_density is not None:
            grid = GridSpec.for_prior(entry.prior, entry.bins)
            reference = _l2_monitor(job.model).reference
            row.l2 = l2_distance(weighted_histogram(positive_part(sample), grid), reference)
            row.criterion = efficiency_criterion(row.n_sims, row.l2)
    row.wall_time = time.perf_counter() - t0
    records = [] if trace is None else [
        {"run_id": job.run_id, **{k: _jsonable(v) for k, v in r.as_dict().items()}}
        for r in trace.records
    ]
    return JobResult(row, records, [] if trace is None else list(trace.warnings))


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def plan_jobs(plan: ExperimentPlan) -> list[Job]:
    plan.validate()
    inner = 1 if plan.workers > 1 else plan.workers
    jobs = []
    for c, overrides in enumerate(plan.cells()):
        for r in range(plan.replicates):
            jobs.append(Job(
                run_id=f"{plan.algorithm}-c{c:03d}-r{r:03d}", model=plan.model, algorithm=plan.algorithm,
                cell=c, replicate=r, seed=cell_seed(plan.base_seed, c, r), config=overrides,
                budget=plan.budget, workers=inner,
            ))
    if len(jobs) == 1:
        jobs[0].workers = plan.workers
    return jobs


class ResultWriter:
    """Single writer for rows, timings and traces; flushes after every run."""

    def __init__(self, out_dir: Path, algorithm: str, keep: Optional[set[str]] = None):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.columns = result_columns(algorithm)
        keep = keep or set()
        self._rewrite(RESULTS_FILE, self.columns, keep)
        self._rewrite(TIMINGS_FILE, ["run_id", "wall_time"], keep)
        traces = self.out_dir / TRACES_FILE
        kept_lines = []
        if keep and traces.exists():
            for line in traces.read_text().splitlines():
                try:
                    if json.loads(line).get("run_id") in keep:
                        kept_lines.append(line + "\n")
                except json.JSONDecodeError:
                    continue
        traces.write_text("".join(kept_lines))
        self._results = open(self.out_dir / RESULTS_FILE, "a", newline="")
        self._timings = open(self.out_dir / TIMINGS_FILE, "a", newline="")
        self._traces = open(traces, "a")
        self._rows = csv.DictWriter(self._results, self.columns, lineterminator="\n")
        self._times = csv.writer(self._timings, lineterminator="\n")

    def _rewrite(self, name: str, header: list[str], keep: set[str]) -> None:
        # keeps only complete rows of finished runs, dropping a torn last line
        path = self.out_dir / name
        kept = []
        if keep and path.exists():
            with open(path, newline="") as fh:
                for rec in csv.DictReader(fh):
                    if rec.get("run_id") in keep and None not in rec.values() and None not in rec:
                        kept.append(rec)
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, header, lineterminator="\n")
            writer.writeheader()
            writer.writerows(kept)

    def write(self, result: JobResult) -> None:
        for rec in result.trace:
            self._traces.write(json.dumps(rec) + "\n")
        self._traces.flush()
        self._times.writerow([result.row.run_id, repr(result.row.wall_time)])
        self._timings.flush()
        self._rows.writerow(result.row.as_record())
        self._results.flush()

    def close(self) -> None:
        for fh in (self._results, self._timings, self._traces):
            fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _complete_records(path: Path) -> Iterable[dict[str, str]]:
    # a run interrupted mid-write can leave a torn last line
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            if None in rec or None in rec.values():
                log.warning("%s: skipping incomplete row", path)
                continue
            yield rec


def read_rows(path) -> list[ResultRow]:
    path = Path(path)
    if path.is_dir():
        path = path / RESULTS_FILE
    return [ResultRow.from_record(rec) for rec in _complete_records(path)]


def completed_run_ids(out_dir) -> set[str]:
    path = Path(out_dir) / RESULTS_FILE
    if not path.exists():
        return set()
    return {rec["run_id"] for rec in _complete_records(path)}


def run_plan(plan: ExperimentPlan, resume: bool = False) -> list[ResultRow]:
    """Execute every cell of ``plan``, writing rows as they finish.

    Rows are written in cell order whatever the worker count. With
    ``resume`` the runs already present in ``results.csv`` are skipped and
    returned as read back from disk.
    """
    jobs = plan_jobs(plan)
    out_dir = Path(plan.out_dir)
    done = completed_run_ids(out_dir) if resume else set()
    previous = {r.run_id: r for r in read_rows(out_dir)} if done else {}
    todo = [j for j in jobs if j.run_id not in done]
    if done:
        log.info("resuming: %d of %d runs already complete", len(jobs) - len(todo), len(jobs))
    fresh: dict[str, ResultRow] = {}
    with ResultWriter(out_dir, plan.algorithm, keep=done) as writer:
        for result in _results(todo, plan.workers):
            writer.write(result)
            fresh[result.row.run_id] = result.row
            for msg in result.warnings:
                log.warning("%s: %s", result.row.run_id, msg)
            log.info("%s %s n_sims=%d l2=%s", result.row.run_id, result.row.status,
                     result.row.n_sims, result.row.l2)
    return [fresh.get(j.run_id) or previous[j.run_id] for j in jobs]


def _results(jobs: list[Job], workers: int) -> Iterable[JobResult]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as pool:
            yield from pool.map(execute, jobs)
    else:
        for job in jobs:
            yield execute(job)


def read_traces(out_dir, run_id: Optional[str] = None) -> list[dict]:
    path = Path(out_dir)
    if path.is_dir():
        path = path / TRACES_FILE
    out = []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            if run_id is None or rec["run_id"] == run_id:
                out.append(rec)
    return out


def export_exact_posterior(grid: GridSpec, model: str = "toy") -> np.ndarray:
    """``(bin center, exact density)`` rows for a one-dimensional grid.

    Densities are cell averages of the closed-form posterior, so the rows
    integrate to 1 over the grid.
    """
    entry = _model(model)
    if entry.exact_density is None:
        raise UnsupportedOperation(f"model {model!r} has no closed-form posterior")
    if grid.dim != 1:
        raise UnsupportedOperation("exact posterior export is one-dimensional")
    return np.column_stack([grid.centers[0], cell_averages(entry.exact_density, grid)])
