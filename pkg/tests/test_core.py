import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apmc.core import (
    BLOCK_SIZE,
    BudgetExhausted,
    ContractViolation,
    FunctionSimulator,
    Particle,
    PriorSpec,
    RandomStreams,
    RunTrace,
    SimulationEngine,
    WeightedSample,
    as_streams,
    distinct_rows,
    prior_density,
    prior_sample,
)
from apmc.models import ToyModel

TABLE1_BOX = [(0, 4), (0, 1), (0, 1), (0, 0.5)]


class TestPriorDensity:
    def test_inside_1d(self, unit_prior):
        assert prior_density(unit_prior, 0.0) == 0.05

    def test_outside_1d(self, unit_prior):
        assert prior_density(unit_prior, 11.0) == 0.0

    def test_table1_box(self):
        # 1 / (4 * 1 * 1 * 0.5)
        assert prior_density(PriorSpec(TABLE1_BOX), [1, 0.5, 0.5, 0.1]) == pytest.approx(0.5, rel=1e-15)

    def test_boundary_is_inside(self, unit_prior):
        assert prior_density(unit_prior, 10.0) == 0.05

    def test_dimension_mismatch(self, unit_prior):
        with pytest.raises(ContractViolation):
            prior_density(unit_prior, [0.0, 1.0])

    def test_vectorised(self):
        prior = PriorSpec([(0, 1), (0, 2)])
        d = prior.density(np.array([[0.5, 1.0], [1.5, 1.0], [0.2, -0.1]]))
        np.testing.assert_array_equal(d, [0.5, 0.0, 0.0])

    @pytest.mark.parametrize("bounds", [[(-10, 10)], [(0, 1), (-2, 3)]])
    def test_integrates_to_one(self, bounds):
        prior = PriorSpec(bounds)
        # midpoint rule over the support padded by 20 cells each side; edges align with the box
        k, pad = 400, 20
        axes = []
        for lo, hi in prior.bounds:
            h = (hi - lo) / k
            axes.append((lo + h * (np.arange(-pad, k + pad) + 0.5), h))
        mesh = np.meshgrid(*[a for a, _ in axes], indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        cell = np.prod([h for _, h in axes])
        assert prior.density(pts).sum() * cell == pytest.approx(1.0, abs=1e-6)


class TestPriorSpec:
    def test_degenerate_box_rejected(self):
        with pytest.raises(ContractViolation):
            PriorSpec([(0, 0)])

    def test_inverted_box_rejected(self):
        with pytest.raises(ContractViolation):
            PriorSpec([(1, 0)])

    def test_infinite_box_rejected(self):
        with pytest.raises(ContractViolation):
            PriorSpec([(0, np.inf)])

    def test_volume(self):
        assert PriorSpec(TABLE1_BOX).volume == 2.0


class TestPriorSample:
    def test_mean_clt_bound(self, unit_prior):
        # 3 sigma / sqrt(n) with sigma = 20 / sqrt(12): about 0.55, spec bound is 1.0
        draws = np.array(prior_sample(unit_prior, 1000, np.random.default_rng(0)))
        assert abs(draws.mean()) < 1.0

    def test_count_and_support(self, rng):
        prior = PriorSpec(TABLE1_BOX)
        draws = prior_sample(prior, 5, rng)
        assert len(draws) == 5
        assert all(prior.contains(d)[0] for d in draws)

    def test_n_zero_rejected(self, unit_prior, rng):
        with pytest.raises(ContractViolation):
            prior_sample(unit_prior, 0, rng)


class TestParticleAndSample:
    def test_particle_rejects_negative_weight(self):
        with pytest.raises(ContractViolation):
            Particle(np.zeros(1), -1.0, 0.0)

    def test_particle_rejects_infinite_distance(self):
        with pytest.raises(ContractViolation):
            Particle(np.zeros(1), 1.0, math.inf)

    def test_particle_rejects_nan_theta(self):
        with pytest.raises(ContractViolation):
            Particle(np.array([np.nan]), 1.0, 0.0)

    def test_round_trip(self):
        parts = [Particle([1.0, 2.0], 0.5, 0.1), Particle([3.0, 4.0], 1.5, 0.2)]
        s = WeightedSample.from_particles(parts, epsilon=0.3, iteration=2)
        assert s.theta.shape == (2, 2)
        assert s.total_weight == 2.0
        back = s.particles
        np.testing.assert_array_equal(back[1].theta, [3.0, 4.0])
        assert back[0].distance == 0.1

    def test_normalized_weights(self):
        s = WeightedSample(np.arange(3.0), [1, 1, 2], np.zeros(3))
        np.testing.assert_allclose(s.normalized_weights(), [0.25, 0.25, 0.5])

    def test_zero_total_weight(self):
        s = WeightedSample(np.arange(3.0), np.zeros(3), np.zeros(3))
        with pytest.raises(ContractViolation):
            s.normalized_weights()

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            WeightedSample(np.arange(3.0), np.ones(2), np.zeros(3))


class TestRandomStreams:
    def test_same_key_same_stream(self):
        a = RandomStreams(5, 1).simulation(3, 0).random(4)
        b = RandomStreams(5, 1).simulation(3, 0).random(4)
        np.testing.assert_array_equal(a, b)

    def test_keys_are_independent(self):
        s = RandomStreams(5)
        draws = [s.simulation(0, 0).random(), s.simulation(0, 1).random(), s.simulation(1, 0).random(),
                 s.algorithm().random(), RandomStreams(6).simulation(0, 0).random()]
        assert len(set(draws)) == len(draws)

    def test_as_streams(self):
        s = RandomStreams(3)
        assert as_streams(s) is s
        assert as_streams(7).seed == 7
        assert as_streams(None).seed == 0


class TestSimulatorDeterminism:
    def test_identical_stream_identical_distance(self):
        toy = ToyModel()
        a = toy(0.3, np.random.default_rng(9))
        b = toy(0.3, np.random.default_rng(9))
        assert a == b

    def test_engine_independent_of_workers(self):
        toy = ToyModel()
        theta = np.linspace(-5, 5, 3 * BLOCK_SIZE + 17)[:, None]
        outs = []
        for workers in (1, 3):
            with SimulationEngine(toy, RandomStreams(11), workers=workers) as eng:
                outs.append(np.concatenate([eng.simulate(theta), eng.simulate(theta[:10])]))
        np.testing.assert_array_equal(outs[0], outs[1])


class TestSimulationEngine:
    def test_counts_simulations(self):
        eng = SimulationEngine(ToyModel(), RandomStreams(0))
        eng.simulate(np.zeros((7, 1)))
        eng.simulate(np.zeros((3, 1)))
        assert eng.n_sims == 10

    def test_budget(self):
        eng = SimulationEngine(ToyModel(), RandomStreams(0), budget=5)
        with pytest.raises(BudgetExhausted):
            eng.simulate(np.zeros((6, 1)))

    def test_rejects_negative_distance(self):
        bad = FunctionSimulator(lambda th, rng: -np.ones(len(th)))
        eng = SimulationEngine(bad, RandomStreams(0))
        with pytest.raises(ContractViolation):
            eng.simulate(np.zeros((2, 1)))


class TestRunTrace:
    def test_columns(self):
        from apmc.core import IterationRecord

        tr = RunTrace("x", [IterationRecord(1, 2.0, 1.0, 10, 5, 5.0, 0.0, {"l2": 0.5}),
                            IterationRecord(2, 1.0, 0.5, 20, 5, 4.0, 0.1)])
        assert tr.n_sims == 20
        np.testing.assert_array_equal(tr.epsilons, [2.0, 1.0])
        np.testing.assert_array_equal(tr.column("l2"), [0.5, np.nan])


def test_distinct_rows():
    a = np.array([[1.0, 2.0], [1.0, 2.0], [3.0, 4.0]])
    assert distinct_rows(a) == 2
    assert distinct_rows(np.zeros((0, 2))) == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(1e-3, 1e3)), min_size=1, max_size=4),
       st.integers(0, 2**32 - 1))
def test_prior_samples_inside_box(intervals, seed):
    prior = PriorSpec([(lo, lo + w) for lo, w in intervals])
    draws = prior.sample(50, np.random.default_rng(seed))
    assert np.all(prior.contains(draws))
    assert np.all(prior.density(draws) == pytest.approx(1 / prior.volume))
