"""Built-in simulators.

``toy``
    One parameter with a uniform prior on ``[-10, 10]``; data are drawn from
    ``0.5 N(theta, 1/100) + 0.5 N(theta, 1)`` and the observation is ``y = 0``.
    The exact posterior is known in closed form up to a constant.

``synthetic4``
    Four parameters on the box ``[0,4] x [0,1] x [0,1] x [0,0.5]`` and eight
    noisy summary statistics (two "census years" of population size, age
    distribution, household-type distribution and net migration). Distances
    are the sup over channels of variance-equalised discrepancies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .core import ContractViolation, PriorSpec, Simulator

_SQRT_2PI = math.sqrt(2 * math.pi)


def _phi(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


# ---------------------------------------------------------------------------
# Toy mixture
# ---------------------------------------------------------------------------


class ToyModel(Simulator):
    """Two-component Gaussian mixture with observed value ``y = 0``."""

    name = "toy"
    dim = 1
    narrow_sd = 0.1
    wide_sd = 1.0

    def __init__(self):
        self.prior = PriorSpec([(-10.0, 10.0)])

    def simulate(self, theta, rng):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        narrow = rng.random(theta.size) < 0.5
        sd = np.where(narrow, self.narrow_sd, self.wide_sd)
        x = theta + sd * rng.standard_normal(theta.size)
        return np.abs(x)

    @cached_property
    def normalizer(self) -> float:
        val, _ = integrate.quad(
            self._unnormalized, -10.0, 10.0, points=[0.0], epsabs=0.0, epsrel=1e-13, limit=200
        )
        return val

    @staticmethod
    def _unnormalized(theta):
        return 0.5 * (10.0 * _phi(10.0 * theta) + _phi(theta))

    def exact_posterior(self, theta):
        theta = np.asarray(theta, dtype=float)
        dens = self._unnormalized(theta) / self.normalizer
        return np.where(np.abs(theta) <= 10.0, dens, 0.0)


_TOY = ToyModel()


def toy_simulate(theta: float, rng: np.random.Generator) -> float:
    return _TOY(theta, rng)


def toy_exact_posterior(theta):
    """Normalised posterior density of the toy model on ``[-10, 10]``."""
    out = _TOY.exact_posterior(theta)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Channels and the sup-norm distance
# ---------------------------------------------------------------------------

ABSOLUTE = "absolute"
CHI_SQUARE = "chi_square"


def discrepancy(kind: str, simulated: np.ndarray, observed: np.ndarray) -> np.ndarray:
    """Raw per-row discrepancy between simulated and observed statistics."""
    simulated = np.asarray(simulated, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if kind == ABSOLUTE:
        diff = np.abs(simulated - observed)
        return diff if diff.ndim <= 1 else diff.sum(axis=-1)
    if kind == CHI_SQUARE:
        return np.sum(np.square(simulated - observed) / observed, axis=-1)
    raise ContractViolation(f"unknown discrepancy kind {kind!r}")


@dataclass(frozen=True)
class StatChannel:
    """One summary statistic compared against its observed value.

    ``extract`` maps the model's raw output mapping to this channel's
    simulated statistic (shape ``(n,)`` or ``(n, bins)``).
    """

    name: str
    extract: Callable[[dict], np.ndarray]
    observed: np.ndarray
    kind: str = ABSOLUTE
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ContractViolation(f"channel {self.name!r} needs a positive scale")

    def raw(self, outputs: dict) -> np.ndarray:
        return discrepancy(self.kind, self.extract(outputs), self.observed)


def infinity_norm_distance(channels: Sequence[StatChannel], simulated_values) -> np.ndarray | float:
    """Largest scaled discrepancy over channels.

    ``simulated_values`` holds one simulated statistic per channel, in
    channel order; each is compared with ``channel.observed``.
    """
    if len(simulated_values) != len(channels):
        raise ContractViolation(
            f"got {len(simulated_values)} simulated values for {len(channels)} channels"
        )
    parts = [
        discrepancy(ch.kind, v, ch.observed) / ch.scale for ch, v in zip(channels, simulated_values)
    ]
    out = np.max(np.stack([np.asarray(p, dtype=float) for p in parts]), axis=0)
    return float(out) if np.ndim(out) == 0 else out


def calibrate_channel_scales(channels: Sequence[StatChannel], prior: PriorSpec, simulator,
                             n_pilot: int, rng: np.random.Generator) -> np.ndarray:
    """Standard deviation of each channel's raw discrepancy under prior-predictive draws.

    ``simulator(theta, rng)`` must return the raw output mapping consumed by
    the channels' extractors.
    """
    if n_pilot < 100:
        raise ContractViolation("calibration needs n_pilot >= 100")
    theta = prior.sample(n_pilot, rng)
    outputs = simulator(theta, rng)
    scales = np.empty(len(channels))
    for k, ch in enumerate(channels):
        sd = float(np.std(ch.raw(outputs)))
        if not sd > 0:
            raise ContractViolation(f"channel {ch.name!r} has zero spread under the prior")
        scales[k] = sd
    return scales


# ---------------------------------------------------------------------------
# Synthetic four-parameter model
# ---------------------------------------------------------------------------

SYNTHETIC_BOUNDS = [(0.0, 4.0), (0.0, 1.0), (0.0, 1.0), (0.0, 0.5)]
SYNTHETIC_TRUTH = np.array([2.0, 0.4, 0.6, 0.15])

# Noise scales, fixed.
POPULATION_SD = 15.0
MIGRATION_SD = 4.0
LOGIT_SD = 0.04
YEARS = (1, 2)


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def synthetic_statistics(theta: np.ndarray, rng: Optional[np.random.Generator]) -> dict:
    """Raw outputs of the synthetic model; noise-free when ``rng`` is None.

    Per census year ``tau`` (1 or 2):

    * ``population``: ``1000 * exp(tau * (0.06 (t1-2) + 0.8 (t4-0.15) + 0.05 (t2-0.5)))``
    * ``age``: 5-bin softmax; the young bins load on ``0.5 (t1-2) - 2.5 (t4-0.15)``
    * ``household``: 4-bin softmax over single / couple / couple with children /
      single parent, driven by ``t3`` and ``t4`` with a small ``t1`` term
    * ``migration``: ``tau * (80 (t2-0.4) - 10 (t3-0.6))``

    Fertility (t1) and separation (t4) act in the same direction on
    population size but in opposite directions on the age structure, so
    together the channels pin both down and leave a moderate negative
    posterior correlation between them (about -0.5 at the default settings).
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    t1, t2, t3, t4 = (theta[:, k] for k in range(4))
    n = theta.shape[0]

    def noise(shape, sd):
        return 0.0 if rng is None else sd * rng.standard_normal(shape)

    out = {}
    for tau in YEARS:
        growth = 0.06 * (t1 - 2) + 0.8 * (t4 - 0.15) + 0.05 * (t2 - 0.5)
        out[f"population_{tau}"] = 1000.0 * np.exp(tau * growth) + noise(n, POPULATION_SD * math.sqrt(tau))

        young = 0.5 * (t1 - 2) - 2.5 * (t4 - 0.15)
        age_logits = np.stack(
            [1.0 + tau * young, 0.8 + 0.5 * tau * young, np.full(n, 1.2), np.full(n, 0.9) - 0.2 * tau * young,
             np.full(n, 0.4) - 0.3 * tau * young],
            axis=1,
        )
        out[f"age_{tau}"] = _softmax(age_logits + noise((n, 5), LOGIT_SD))

        hh_logits = np.stack(
            [
                0.6 - 1.5 * (t3 - 0.6) + 2.0 * tau * (t4 - 0.15),
                0.5 + 1.2 * (t3 - 0.6),
                0.9 + 1.0 * (t3 - 0.6) + 0.15 * (t1 - 2) - tau * (t4 - 0.15),
                -0.8 + 3.0 * tau * (t4 - 0.15),
            ],
            axis=1,
        )
        out[f"household_{tau}"] = _softmax(hh_logits + noise((n, 4), LOGIT_SD))

        out[f"migration_{tau}"] = tau * (80.0 * (t2 - 0.4) - 10.0 * (t3 - 0.6)) + noise(n, MIGRATION_SD * math.sqrt(tau))
    return out


def _channel_specs():
    specs = []
    for tau in YEARS:
        specs += [
            (f"population_{tau}", ABSOLUTE),
            (f"age_{tau}", CHI_SQUARE),
            (f"household_{tau}", CHI_SQUARE),
            (f"migration_{tau}", ABSOLUTE),
        ]
    return specs


class SyntheticMultiStatModel(Simulator):
    """Four-parameter, eight-channel stand-in for an individual-based model.

    Observed statistics are the noise-free outputs at ``truth``. Channel
    scales default to 1 until :meth:`calibrated` is called.
    """

    name = "synthetic4"
    dim = 4

    def __init__(self, truth=SYNTHETIC_TRUTH, scales: Optional[Sequence[float]] = None):
        self.prior = PriorSpec(SYNTHETIC_BOUNDS)
        self.truth = np.asarray(truth, dtype=float)
        if not np.all(self.prior.contains(self.truth)):
            raise ContractViolation("ground truth must lie inside the prior box")
        observed = synthetic_statistics(self.truth[None, :], None)
        scales = np.ones(8) if scales is None else np.asarray(scales, dtype=float)
        self.channels = [
            StatChannel(name, _getter(name), observed[name][0], kind, float(s))
            for (name, kind), s in zip(_channel_specs(), scales)
        ]

    @property
    def scales(self) -> np.ndarray:
        return np.array([ch.scale for ch in self.channels])

    def statistics(self, theta, rng) -> dict:
        return synthetic_statistics(theta, rng)

    def simulate(self, theta, rng):
        outputs = self.statistics(theta, rng)
        return infinity_norm_distance(self.channels, [ch.extract(outputs) for ch in self.channels])

    def calibrated(self, n_pilot: int = 2000, rng: Optional[np.random.Generator] = None) -> "SyntheticMultiStatModel":
        """Copy of the model with variance-equalising channel scales."""
        rng = np.random.default_rng(0) if rng is None else rng
        scales = calibrate_channel_scales(self.channels, self.prior, self.statistics, n_pilot, rng)
        return SyntheticMultiStatModel(self.truth, scales)


def _getter(name: str):
    return lambda outputs: outputs[name]


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


@dataclass
class ModelEntry:
    """What the harness needs to know about a model."""

    name: str
    simulator: Simulator
    prior: PriorSpec
    bins: tuple[int, ...]
    exact_density: Optional[Callable] = None
    truth: Optional[np.ndarray] = None
    extras: dict = field(default_factory=dict)


def _toy_entry() -> ModelEntry:
    model = ToyModel()
    return ModelEntry("toy", model, model.prior, (300,), model.exact_posterior)


def _synthetic_entry() -> ModelEntry:
    model = SyntheticMultiStatModel().calibrated()
    return ModelEntry("synthetic4", model, model.prior, (4, 4, 4, 4), None, model.truth)


MODELS: dict[str, Callable[[], ModelEntry]] = {
    "toy": _toy_entry,
    "synthetic4": _synthetic_entry,
}


def get_model(name: str) -> ModelEntry:
    try:
        return MODELS[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
