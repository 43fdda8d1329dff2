import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apmc.core import ContractViolation, WeightedSample
from apmc.metrics import (
    GridSpec,
    HistogramGrid,
    L2Monitor,
    cell_averages,
    distinct_count,
    efficiency_criterion,
    l2_distance,
    pair_density_grids,
    positive_part,
    summarize,
    weighted_histogram,
)
from apmc.models import toy_exact_posterior
from apmc.sampling import multinomial_resample

from helpers import sample_1d

TOY_GRID = GridSpec([(-10.0, 10.0)], 300)


class TestWeightedHistogram:
    def test_single_cell(self):
        g = GridSpec([(0.0, 1.0)], 4)
        h = weighted_histogram(sample_1d([0.3, 0.31, 0.4]), g)
        np.testing.assert_array_equal(h.values, [0.0, 4.0, 0.0, 0.0])

    def test_uniform_draws(self):
        n, k = 100000, 50
        g = GridSpec([(-10.0, 10.0)], k)
        h = weighted_histogram(sample_1d(np.random.default_rng(0).uniform(-10, 10, n)), g)
        p = 1 / k
        band = 5 * np.sqrt(p * (1 - p) / n) / g.cell_volume
        assert np.all(np.abs(h.values - 1 / 20) < band)

    def test_weight_scale_invariant(self, rng):
        x = rng.uniform(-5, 5, 500)
        w = rng.random(500)
        a = weighted_histogram(sample_1d(x, w), TOY_GRID)
        b = weighted_histogram(sample_1d(x, 2 * w), TOY_GRID)
        np.testing.assert_allclose(a.values, b.values, rtol=1e-14)

    def test_mass_is_one(self, rng):
        h = weighted_histogram(sample_1d(rng.uniform(-10, 10, 1000), rng.random(1000)), TOY_GRID)
        assert abs(h.mass - 1.0) < 1e-9
        assert np.all(h.values >= 0)

    def test_out_of_box(self):
        with pytest.raises(ContractViolation):
            weighted_histogram(sample_1d([0.0, 10.5]), TOY_GRID)

    def test_four_dimensional(self, rng):
        g = GridSpec([(0, 4), (0, 1), (0, 1), (0, 0.5)], (4, 4, 4, 4))
        theta = rng.random((2000, 4)) * [4, 1, 1, 0.5]
        h = weighted_histogram(WeightedSample(theta, np.ones(2000), np.zeros(2000)), g)
        assert h.values.shape == (4, 4, 4, 4)
        assert abs(h.mass - 1.0) < 1e-9


class TestL2:
    def test_identical(self):
        h = HistogramGrid(TOY_GRID, cell_averages(toy_exact_posterior, TOY_GRID))
        assert l2_distance(h, toy_exact_posterior) < 1e-9

    def test_flat(self):
        g = GridSpec([(0.0, 2.0)], 10)
        h = HistogramGrid(g, np.full(10, 0.5))
        assert l2_distance(h, lambda t: np.full(np.shape(t), 0.5)) == 0.0

    def test_one_cell(self):
        g = GridSpec([(0.0, 1.0)], 1)
        assert l2_distance(HistogramGrid(g, np.array([2.0])), lambda t: np.ones_like(t)) == 1.0

    def test_grid_mismatch(self):
        a = HistogramGrid(GridSpec([(0, 1)], 3), np.ones(3))
        b = HistogramGrid(GridSpec([(0, 1)], 4), np.ones(4))
        with pytest.raises(ContractViolation):
            l2_distance(a, b)

    def test_cell_averages_are_exact_for_linear(self):
        g = GridSpec([(0.0, 1.0)], 5)
        np.testing.assert_allclose(cell_averages(lambda t: 3 * t + 1, g), 3 * g.centers[0] + 1, rtol=1e-14)

    def test_ordering_invariant(self, rng):
        x = rng.uniform(-3, 3, 400)
        w = rng.random(400)
        perm = rng.permutation(400)
        a = l2_distance(weighted_histogram(sample_1d(x, w), TOY_GRID), toy_exact_posterior)
        b = l2_distance(weighted_histogram(sample_1d(x[perm], w[perm]), TOY_GRID), toy_exact_posterior)
        assert a == pytest.approx(b, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        g = GridSpec([(0, 1), (0, 2)], (5, 3))
        hs = [HistogramGrid(g, rng.random((5, 3)) * rng.integers(1, 4)) for _ in range(3)]
        ab, bc, ac = l2_distance(hs[0], hs[1]), l2_distance(hs[1], hs[2]), l2_distance(hs[0], hs[2])
        assert ac <= ab + bc + 1e-12

    def test_resampling_converges(self):
        rng = np.random.default_rng(0)
        x = rng.normal(0, 2, 5000).clip(-9.9, 9.9)
        s = sample_1d(x, rng.random(5000) ** 2)
        ref = weighted_histogram(s, TOY_GRID)
        gaps = []
        for n in (10**3, 10**4, 10**5):
            reps = [l2_distance(weighted_histogram(multinomial_resample(s, n, rng), TOY_GRID), ref)
                    for _ in range(3)]
            gaps.append(np.mean(reps))
        assert gaps[0] > gaps[1] > gaps[2]


class TestMonitor:
    def test_ignores_zero_weight_particles_outside_box(self):
        mon = L2Monitor(TOY_GRID, toy_exact_posterior)
        s = sample_1d([0.0, 12.0], [1.0, 0.0])
        assert mon(s)["l2"] == pytest.approx(
            l2_distance(weighted_histogram(sample_1d([0.0]), TOY_GRID), toy_exact_posterior))

    def test_positive_part(self):
        s = positive_part(sample_1d([1.0, 2.0, 3.0], [0.0, 1.0, 2.0]))
        np.testing.assert_array_equal(s.theta[:, 0], [2.0, 3.0])


class TestDistinctCount:
    def test_fresh_draws(self, rng):
        assert distinct_count(sample_1d(rng.normal(size=1000))) == 1000

    def test_copies(self):
        assert distinct_count(sample_1d([0.7] * 5)) == 1

    def test_mixed(self):
        assert distinct_count(sample_1d([1.0, 1.0, 2.0])) == 2

    def test_bitwise(self):
        assert distinct_count(sample_1d([0.1, 0.1 + 1e-17, np.nextafter(0.1, 1)])) == 2


class TestEfficiency:
    def test_value(self):
        assert efficiency_criterion(10000, 0.1) == pytest.approx(100.0, rel=1e-12)

    def test_zero_l2(self):
        assert efficiency_criterion(123, 0.0) == 0.0

    def test_scale_covariant(self):
        assert efficiency_criterion(2000, 0.3) == 2 * efficiency_criterion(1000, 0.3)

    def test_requires_a_simulation(self):
        with pytest.raises(ContractViolation):
            efficiency_criterion(0, 0.1)


class TestSummarize:
    def test_single(self):
        assert summarize([0.4]) == (0.4, 0.0)

    def test_pair(self):
        mean, sd = summarize([0.1, 0.3])
        assert mean == pytest.approx(0.2)
        assert sd == pytest.approx(0.1414, abs=1e-4)

    def test_empty(self):
        with pytest.raises(ContractViolation):
            summarize([])


def test_pair_density_grids(rng):
    g = GridSpec([(0, 4), (0, 1), (0, 1), (0, 0.5)], (4, 5, 6, 7))
    theta = rng.random((3000, 4)) * [4, 1, 1, 0.5]
    grids = pair_density_grids(WeightedSample(theta, rng.random(3000), np.zeros(3000)), g)
    assert set(grids) == {(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)}
    for (i, j), dens in grids.items():
        assert dens.shape == (g.bins[i], g.bins[j])
        assert dens.sum() * g.widths[i] * g.widths[j] == pytest.approx(1.0, abs=1e-9)
