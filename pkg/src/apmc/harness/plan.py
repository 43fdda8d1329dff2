"""Experiment plans and the algorithm registry.

A plan file is YAML::

    model: toy                # registry name, see apmc.models.MODELS
    algorithm: apmc           # rejection | pmc | apmc | rsmc | smc
    fixed:                    # config fields shared by every cell (optional)
      n: 1000
    grid:                     # config fields to sweep; cells = cartesian product
      alpha: [0.1, 0.5, 0.9]
      p_acc_min: [0.01, 0.05]
    replicates: 10            # >= 1
    base_seed: 0
    budget: 100000000         # per run
    workers: 1                # cells run concurrently up to this count
    out_dir: results/apmc_toy

Grid keys are expanded in file order, the last key varying fastest. Config
fields are those of the algorithm's config dataclass except ``seed``;
run seeds come from ``base_seed`` and the cell and replicate indices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import yaml

from ..algorithms import (
    ApmcConfig,
    PmcConfig,
    RsmcConfig,
    SmcConfig,
    run_apmc,
    run_pmc,
    run_rejection,
    run_rsmc,
    run_smc,
)
from ..core import DEFAULT_BUDGET, ContractViolation
from ..models import MODELS


class ConfigurationError(ValueError):
    """Raised for a plan or command line that cannot be executed."""


class UnsupportedOperation(ConfigurationError):
    """The requested operation does not apply to the selected model."""


@dataclass
class RejectionConfig:
    """Settings for plain rejection ABC."""

    n: int = 1000
    epsilon: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or not self.epsilon > 0:
            raise ContractViolation("rejection needs n >= 1 and epsilon > 0")


def _run_rejection(prior, simulator, config: RejectionConfig, rng=None, **kw):
    return run_rejection(prior, simulator, config.n, config.epsilon, rng, **kw)


@dataclass(frozen=True)
class AlgorithmEntry:
    name: str
    config_cls: type
    runner: Callable

    @property
    def config_fields(self) -> list[str]:
        return [f.name for f in fields(self.config_cls) if f.name != "seed"]

    def make_config(self, values: dict) -> Any:
        unknown = sorted(set(values) - set(self.config_fields))
        if unknown:
            raise ConfigurationError(
                f"{self.name} has no config field(s) {unknown}; valid: {self.config_fields}"
            )
        try:
            return self.config_cls(**{k: _numeric(v) for k, v in values.items()})
        except (ContractViolation, TypeError) as err:
            raise ConfigurationError(f"invalid {self.name} config {values}: {err}") from None


def _numeric(value):
    # YAML 1.1 reads exponent forms without a dot, such as 1e-6, as strings
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [_numeric(v) for v in value]
    return value


ALGORITHMS: dict[str, AlgorithmEntry] = {
    "rejection": AlgorithmEntry("rejection", RejectionConfig, _run_rejection),
    "pmc": AlgorithmEntry("pmc", PmcConfig, run_pmc),
    "apmc": AlgorithmEntry("apmc", ApmcConfig, run_apmc),
    "rsmc": AlgorithmEntry("rsmc", RsmcConfig, run_rsmc),
    "smc": AlgorithmEntry("smc", SmcConfig, run_smc),
}


def get_algorithm(name: str) -> AlgorithmEntry:
    try:
        return ALGORITHMS[name]
    except KeyError:
        raise ConfigurationError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None


def cell_seed(base_seed: int, cell: int, replicate: int) -> int:
    """Run seed derived by hashing ``(base_seed, cell, replicate)``."""
    ss = np.random.SeedSequence([int(base_seed), int(cell), int(replicate)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass
class ExperimentPlan:
    model: str
    algorithm: str
    grid: dict[str, list] = field(default_factory=dict)
    fixed: dict[str, Any] = field(default_factory=dict)
    replicates: int = 1
    base_seed: int = 0
    budget: int = DEFAULT_BUDGET
    workers: int = 1
    out_dir: str = "results"

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigurationError("replicates must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.budget < 1:
            raise ConfigurationError("budget must be >= 1")
        for key, values in self.grid.items():
            if not isinstance(values, list) or not values:
                raise ConfigurationError(f"grid entry {key!r} must be a nonempty list")
        overlap = set(self.grid) & set(self.fixed)
        if overlap:
            raise ConfigurationError(f"fields {sorted(overlap)} are both fixed and swept")

    def cells(self) -> list[dict[str, Any]]:
        """Config overrides of every cell, in execution order."""
        keys = list(self.grid)
        combos = itertools.product(*(self.grid[k] for k in keys)) if keys else [()]
        return [{**self.fixed, **dict(zip(keys, combo))} for combo in combos]

    def validate(self) -> list[Any]:
        """Check the registries and build every cell's config; no simulation runs."""
        if self.model not in MODELS:
            raise ConfigurationError(f"unknown model {self.model!r}; choose from {sorted(MODELS)}")
        entry = get_algorithm(self.algorithm)
        return [entry.make_config(c) for c in self.cells()]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        if not isinstance(data, dict):
            raise ConfigurationError("plan must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown plan key(s) {unknown}")
        missing = [k for k in ("model", "algorithm") if k not in data]
        if missing:
            raise ConfigurationError(f"plan is missing {missing}")
        data = dict(data)
        data["grid"] = dict(data.get("grid") or {})
        data["fixed"] = dict(data.get("fixed") or {})
        if "budget" in data:
            data["budget"] = _as_count(data["budget"], "budget")
        return cls(**data)


def _as_count(value, name: str) -> int:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a number") from None
    if not math.isfinite(v) or v != int(v):
        raise ConfigurationError(f"{name} must be a whole number")
    return int(v)


def load_plan(path, overrides: Optional[dict] = None) -> ExperimentPlan:
    """Read a YAML plan; ``overrides`` replaces top-level keys (CLI flags)."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigurationError(f"cannot parse plan {path}: {err}") from None
    data = dict(data or {})
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentPlan.from_dict(data)
