import math
import warnings

import numpy as np
import pytest
from scipy import integrate, stats

from apmc.algorithms import PmcConfig, run_pmc
from apmc.core import ContractViolation, DegenerateKernelError, PriorSpec, WeightedSample
from apmc.kernels import (
    MULTIVARIATE,
    UNIVARIATE,
    KernelSpec,
    WeightUnderflowWarning,
    apmc_weight,
    kernel_from_sample,
    perturb,
    pmc_weight,
    proposal_density,
    weighted_moments,
)
from apmc.models import ToyModel

from helpers import sample_1d

PHI0 = 1 / math.sqrt(2 * math.pi)


class TestWeightedMoments:
    def test_constant_sample(self):
        mean, cov = weighted_moments(sample_1d([0.0, 0.0], [0.3, 0.7]))
        assert mean[0] == 0 and cov[0, 0] == 0

    def test_symmetric_pair(self):
        mean, cov = weighted_moments(sample_1d([-1.0, 1.0]))
        assert mean[0] == 0
        assert cov[0, 0] == 1.0

    def test_weighted_2d(self):
        s = WeightedSample(np.array([[0.0, 0.0], [2.0, 0.0]]), [1.0, 3.0], np.zeros(2))
        mean, cov = weighted_moments(s)
        np.testing.assert_allclose(mean, [1.5, 0.0], rtol=1e-15)
        assert cov[0, 0] == pytest.approx(0.75, rel=1e-15)

    def test_equal_weights_reduce_to_unweighted(self, rng):
        theta = rng.normal(size=(50, 3))
        mean, cov = weighted_moments(WeightedSample(theta, np.full(50, 2.0), np.zeros(50)))
        np.testing.assert_allclose(mean, theta.mean(axis=0), rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(cov, np.cov(theta.T, bias=True), rtol=1e-12, atol=1e-15)

    def test_zero_weights_rejected(self):
        with pytest.raises(ContractViolation):
            weighted_moments(sample_1d([1.0, 2.0], [0.0, 0.0]))


class TestKernelFromSample:
    def test_twice_variance(self):
        k = kernel_from_sample(sample_1d([-1.0, 1.0]))
        assert k.variances[0] == 2.0

    def test_degenerate(self):
        with pytest.raises(DegenerateKernelError) as info:
            kernel_from_sample(sample_1d([3.0, 3.0, 3.0]))
        assert info.value.dimension == 0

    def test_degenerate_reports_dimension(self, rng):
        theta = np.column_stack([rng.normal(size=10), np.full(10, 2.0)])
        with pytest.raises(DegenerateKernelError) as info:
            kernel_from_sample(WeightedSample(theta, np.ones(10), np.zeros(10)), MULTIVARIATE)
        assert info.value.dimension == 1

    def test_multivariate_is_twice_covariance(self, rng):
        theta = rng.multivariate_normal([0, 0], [[1, 0.6], [0.6, 2]], size=300)
        s = WeightedSample(theta, rng.random(300), np.zeros(300))
        _, cov = weighted_moments(s)
        k = kernel_from_sample(s, MULTIVARIATE)
        np.testing.assert_array_equal(k.cov, 2.0 * cov)
        np.testing.assert_array_equal(k.cov, k.cov.T)

    def test_univariate_keeps_diagonal(self, rng):
        theta = rng.multivariate_normal([0, 0], [[1, 0.6], [0.6, 2]], size=300)
        s = WeightedSample(theta, np.ones(300), np.zeros(300))
        k = kernel_from_sample(s, UNIVARIATE)
        assert k.cov[0, 1] == 0.0
        _, cov = weighted_moments(s)
        np.testing.assert_array_equal(np.diag(k.cov), 2.0 * np.diag(cov))


class TestPerturb:
    def test_mean(self):
        draws = perturb(np.zeros((10000, 1)), KernelSpec(UNIVARIATE, [[1.0]]), np.random.default_rng(0))
        assert abs(draws.mean()) < 0.05

    def test_identity_covariance(self):
        k = KernelSpec(MULTIVARIATE, np.eye(3))
        draws = perturb(np.zeros((10000, 3)), k, np.random.default_rng(1))
        np.testing.assert_allclose(np.cov(draws.T), np.eye(3), atol=0.1)

    def test_full_covariance(self):
        c = np.array([[2.0, 0.8], [0.8, 1.0]])
        draws = perturb(np.zeros((20000, 2)), KernelSpec(MULTIVARIATE, c), np.random.default_rng(2))
        np.testing.assert_allclose(np.cov(draws.T), c, atol=0.1)

    def test_shape(self, rng):
        k = KernelSpec(MULTIVARIATE, np.eye(4))
        assert perturb(np.ones(4), k, rng).shape == (4,)
        assert perturb(np.ones((7, 4)), k, rng).shape == (7, 4)

    def test_not_positive_definite(self, rng):
        with pytest.raises(ContractViolation):
            perturb(np.zeros(2), KernelSpec(MULTIVARIATE, [[1.0, 2.0], [2.0, 1.0]]), rng)
        with pytest.raises(ContractViolation):
            perturb(np.zeros(1), KernelSpec(UNIVARIATE, [[0.0]]), rng)


class TestProposalDensity:
    def test_single_particle(self):
        d = proposal_density(0.0, sample_1d([0.0]), KernelSpec(UNIVARIATE, [[1.0]]))
        assert d == pytest.approx(PHI0, rel=1e-15)
        assert d == pytest.approx(0.398942, abs=1e-6)

    def test_two_particles(self):
        d = proposal_density(0.0, sample_1d([-1.0, 1.0]), KernelSpec(UNIVARIATE, [[1.0]]))
        assert d == pytest.approx(stats.norm.pdf(1.0), rel=1e-14)
        assert d == pytest.approx(0.241971, abs=1e-6)

    def test_integrates_to_one_1d(self, rng):
        s = sample_1d(rng.normal(size=20), rng.random(20))
        k = KernelSpec(UNIVARIATE, [[0.3]])
        val, _ = integrate.quad(lambda t: proposal_density(t, s, k), -np.inf, np.inf, limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_integrates_to_one_2d(self, rng):
        s = WeightedSample(rng.normal(size=(5, 2)), rng.random(5), np.zeros(5))
        k = KernelSpec(MULTIVARIATE, [[0.5, 0.2], [0.2, 0.4]])
        h = 0.02
        g = np.arange(-8, 8, h) + h / 2
        xx, yy = np.meshgrid(g, g, indexing="ij")
        vals = proposal_density(np.column_stack([xx.ravel(), yy.ravel()]), s, k)
        assert np.all(vals >= 0)
        assert vals.sum() * h * h == pytest.approx(1.0, abs=1e-6)

    def test_matches_scipy_mixture(self, rng):
        centers = rng.normal(size=(6, 3))
        w = rng.random(6)
        cov = np.array([[1.0, 0.3, 0.1], [0.3, 0.8, -0.2], [0.1, -0.2, 0.5]])
        s = WeightedSample(centers, w, np.zeros(6))
        pts = rng.normal(size=(10, 3))
        ref = sum(wj / w.sum() * stats.multivariate_normal(c, cov).pdf(pts) for wj, c in zip(w, centers))
        np.testing.assert_allclose(proposal_density(pts, s, KernelSpec(MULTIVARIATE, cov)), ref, rtol=1e-12)

    def test_zero_weight_sample_rejected(self):
        with pytest.raises(ContractViolation):
            proposal_density(0.0, sample_1d([0.0], [0.0]), KernelSpec(UNIVARIATE, [[1.0]]))


class TestWeights:
    prior = PriorSpec([(-10.0, 10.0)])
    kernel = KernelSpec(UNIVARIATE, [[1.0]])

    def test_apmc_weight_value(self):
        w = apmc_weight(0.0, sample_1d([0.0]), self.kernel, self.prior)
        assert w == pytest.approx(0.05 / PHI0, rel=1e-15)
        assert w == pytest.approx(0.125331, abs=1e-6)

    def test_outside_prior(self):
        assert apmc_weight(10.5, sample_1d([0.0]), self.kernel, self.prior) == 0.0

    def test_ratio_identity(self, rng):
        s = sample_1d(rng.uniform(-3, 3, 40), rng.random(40))
        th = rng.uniform(-12, 12, 500)
        expected = self.prior.density(th[:, None]) / proposal_density(th, s, self.kernel)
        np.testing.assert_allclose(apmc_weight(th, s, self.kernel, self.prior), expected, rtol=1e-12)

    def test_pmc_weight_same_formula(self, rng):
        s = sample_1d(rng.normal(size=30), rng.random(30))
        th = rng.normal(size=100)
        np.testing.assert_array_equal(apmc_weight(th, s, self.kernel, self.prior),
                                      pmc_weight(th, s, self.kernel, self.prior))

    def test_pmc_renormalised_sum(self, rng):
        s = sample_1d(rng.normal(size=30), rng.random(30))
        w = pmc_weight(rng.normal(size=1000), s, self.kernel, self.prior)
        assert (w / w.sum()).sum() == pytest.approx(1.0, abs=1e-12)

    def test_pmc_first_generation_uniform(self):
        toy = ToyModel()
        sample, _ = run_pmc(toy.prior, toy, PmcConfig(n=5000, schedule=[2.0]), 0)
        np.testing.assert_array_equal(sample.weights, np.full(5000, 1 / 5000))

    def test_underflow_gives_zero_and_warns(self):
        k = KernelSpec(UNIVARIATE, [[1e-4]])
        with pytest.warns(WeightUnderflowWarning):
            w = apmc_weight(np.array([0.0, 9.0]), sample_1d([0.0]), k, self.prior)
        assert w[0] > 0 and w[1] == 0.0

    def test_no_warning_outside_prior(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert apmc_weight(50.0, sample_1d([0.0]), self.kernel, self.prior) == 0.0
