"""Weighted moments, Gaussian perturbation kernels and the importance
weights that correct for sampling from a kernel mixture instead of the prior.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import ContractViolation, DegenerateKernelError, PriorSpec, WeightedSample

logger = logging.getLogger(__name__)

UNIVARIATE = "univariate"
MULTIVARIATE = "multivariate"
KERNEL_VARIANTS = (UNIVARIATE, MULTIVARIATE)

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
_CHUNK_ELEMENTS = 2**22


class WeightUnderflowWarning(RuntimeWarning):
    """A proposal density evaluated to exactly zero; the weight was set to 0."""


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian perturbation kernel.

    ``cov`` is always stored as a full ``(d, d)`` matrix. For the
    univariate variant it is diagonal and every coordinate is perturbed and
    evaluated independently; for the multivariate variant the full matrix is
    used through its Cholesky factor.
    """

    variant: str
    cov: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape[0] != cov.shape[1]:
            raise ContractViolation("kernel covariance must be square")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ContractViolation("kernel covariance must be symmetric")
        if self.variant not in KERNEL_VARIANTS:
            raise ContractViolation(f"unknown kernel variant {self.variant!r}")
        if self.variant == UNIVARIATE:
            cov = np.diag(np.diag(cov))
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.cov.shape[0]

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.cov).copy()

    def cholesky(self) -> np.ndarray:
        if self.variant == UNIVARIATE:
            var = np.diag(self.cov)
            if np.any(var <= 0):
                raise ContractViolation("kernel is not positive definite")
            return np.diag(np.sqrt(var))
        try:
            return np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError as err:
            raise ContractViolation("kernel is not positive definite") from err


def weighted_moments(sample: WeightedSample) -> tuple[np.ndarray, np.ndarray]:
    """Weighted mean and (biased) weighted covariance of a sample."""
    w = sample.normalized_weights()
    mean = w @ sample.theta
    centered = sample.theta - mean
    cov = (centered * w[:, None]).T @ centered
    return mean, cov


def kernel_from_sample(sample: WeightedSample, variant: str = UNIVARIATE) -> KernelSpec:
    """Kernel with twice the weighted (co)variance of ``sample``."""
    _, cov = weighted_moments(sample)
    diag = np.diag(cov)
    for k, v in enumerate(diag):
        if not v > 0:
            raise DegenerateKernelError(k)
    return KernelSpec(variant, 2.0 * cov)


def perturb(seed, kernel: KernelSpec, rng: np.random.Generator) -> np.ndarray:
    """Gaussian draw(s) centred at ``seed``; accepts one vector or rows of vectors."""
    seed = np.asarray(seed, dtype=float)
    single = seed.ndim <= 1
    pts = seed.reshape(1, -1) if single else seed
    if pts.shape[1] != kernel.dim:
        raise ContractViolation("seed and kernel dimensions differ")
    chol = kernel.cholesky()
    out = pts + rng.standard_normal(pts.shape) @ chol.T
    return out[0] if single else out


def _points(theta, dim: int) -> np.ndarray:
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1) if arr.size == dim and dim > 1 else arr.reshape(-1, dim)
    return arr


def log_kernel_matrix(theta: np.ndarray, centers: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    """``log N(theta_i; center_j, cov)`` for every pair, shape ``(m, n)``."""
    d = kernel.dim
    if kernel.variant == UNIVARIATE or d == 1:
        sd = np.sqrt(kernel.variances)
        if np.any(sd <= 0):
            raise ContractViolation("kernel is not positive definite")
        z = (theta[:, None, :] - centers[None, :, :]) / sd
        return -0.5 * np.sum(z * z, axis=2) - np.sum(np.log(sd)) - d * _LOG_SQRT_2PI
    chol = kernel.cholesky()
    log_det = np.sum(np.log(np.diag(chol)))
    diff = theta[:, None, :] - centers[None, :, :]
    z = solve_triangular(chol, diff.reshape(-1, d).T, lower=True).T.reshape(diff.shape)
    return -0.5 * np.sum(z * z, axis=2) - log_det - d * _LOG_SQRT_2PI


def proposal_density(theta, sample: WeightedSample, kernel: KernelSpec) -> np.ndarray | float:
    """Density of drawing ``theta`` by picking a particle of ``sample`` by
    weight and perturbing it with ``kernel``.

    Returns a float for a single point, otherwise one value per row.
    """
    pts = _points(theta, kernel.dim)
    single = np.ndim(theta) <= 1 and pts.shape[0] == 1
    w = sample.normalized_weights()
    kernel.cholesky()  # positive-definiteness check
    n = len(sample)
    step = max(1, _CHUNK_ELEMENTS // max(1, n * kernel.dim))
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], step):
        block = pts[start:start + step]
        if kernel.dim == 1:
            sd = math.sqrt(kernel.cov[0, 0])
            z = (block[:, 0][:, None] - sample.theta[:, 0][None, :]) / sd
            dens = np.exp(-0.5 * z * z) / (sd * math.sqrt(2 * math.pi))
        else:
            dens = np.exp(log_kernel_matrix(block, sample.theta, kernel))
        out[start:start + step] = dens @ w
    return float(out[0]) if single else out


def _importance_weights(theta, sample, kernel, prior: PriorSpec):
    pts = _points(theta, kernel.dim)
    single = np.ndim(theta) <= 1 and pts.shape[0] == 1
    num = np.atleast_1d(prior.density(pts))
    den = np.atleast_1d(proposal_density(pts, sample, kernel))
    w = np.zeros_like(num)
    ok = den > 0
    np.divide(num, den, out=w, where=ok)
    underflow = (~ok) & (num > 0)
    if np.any(underflow):
        count = int(underflow.sum())
        logger.warning("proposal density underflowed for %d particle(s); weight set to 0", count)
        warnings.warn(
            f"proposal density underflowed for {count} particle(s); weight set to 0",
            WeightUnderflowWarning,
            stacklevel=3,
        )
    return float(w[0]) if single else w


def apmc_weight(theta, sample: WeightedSample, kernel: KernelSpec, prior: PriorSpec):
    """Prior density over proposal density, left unnormalised so that
    particles from different iterations share one weight scale."""
    return _importance_weights(theta, sample, kernel, prior)


def pmc_weight(theta, sample: WeightedSample, kernel: KernelSpec, prior: PriorSpec):
    """Same ratio as :func:`apmc_weight`; PMC callers renormalise per generation."""
    return _importance_weights(theta, sample, kernel, prior)
