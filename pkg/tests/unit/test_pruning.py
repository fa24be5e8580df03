import gc
import math

import numpy as np
import pytest
from scipy.special import erf

from rbfprune.core.conformance import gradient_error, random_network
from rbfprune.core.distributions import (
    Bernoulli, GaussianMixture, UniformBox, bernoulli, std_normal, uniform_box,
)
from rbfprune.core.exceptions import (
    DimensionMismatchError, InvalidArgumentError, InvalidDistributionError, NonFiniteValueError,
)
from rbfprune.core.model import RbfNetwork
from rbfprune.core.optimizer import StopReason
from rbfprune.core.oracles import (
    bernoulli_expectation_exhaustive, expectation_quadrature, finite_difference_gradients,
    pruning_objective_exhaustive,
)
from rbfprune.core.pruning import (
    PruneConfig, PruningObjective, cached_constant_count, centroid_feature_profile, clamp_objective,
    expectation,
    expectation_bernoulli, expectation_gaussian_mixture, expectation_matrix, expectation_uniform,
    objective_for, prune, pruning_objective, pruning_objective_gradients,
)


def random_mixture(rng, dim, components=2):
    weights = rng.dirichlet(np.ones(components), size=dim)
    return GaussianMixture(weights, rng.uniform(-2, 2, size=(dim, components)),
                           rng.uniform(0.2, 2.0, size=(dim, components)))


FAMILIES = {
    'gaussian': lambda rng, d: random_mixture(rng, d),
    'uniform': lambda rng, d: UniformBox(rng.uniform(-2, -0.5, size=d), rng.uniform(0.5, 2, size=d)),
    'bernoulli': lambda rng, d: Bernoulli(rng.uniform(0, 1, size=d)),
}


class TestExpectations:
    @pytest.mark.parametrize('family', sorted(FAMILIES))
    def test_zero_scales_give_one(self, family, rng):
        dist = FAMILIES[family](rng, 3)
        u, v = rng.normal(size=(2, 3))
        assert expectation(0.0, 0.0, u, v, dist) == 1.0

    def test_uniform_zero_scales_exactly_one_through_closed_form(self):
        from rbfprune.core.pruning import kernel_terms
        terms = kernel_terms(0.0, 0.0, [[0.3]], [[-0.2]], uniform_box(1, -1, 1))
        assert terms.log_value[0, 0] == 0.0

    def test_standard_normal_single_kernel(self):
        value = expectation_gaussian_mixture(1.0, 0.0, [0.0], [5.0], std_normal(1))
        assert value == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-14)

    def test_uniform_single_kernel(self):
        value = expectation_uniform(1.0, 0.0, [0.0], [0.0], uniform_box(1, -1, 1))
        assert value == pytest.approx(math.sqrt(math.pi) / 2.0 * erf(1.0), rel=1e-14)
        assert value == pytest.approx(0.746824, abs=1e-6)

    def test_bernoulli_point_mass(self, rng):
        u, v = rng.normal(size=(2, 4))
        k, r = 0.8, 1.7
        value = expectation_bernoulli(k, r, u, v, Bernoulli(np.ones(4)))
        expected = math.exp(-k * np.sum((u - 1) ** 2) - r * np.sum((v - 1) ** 2))
        assert value == pytest.approx(expected, rel=1e-13)

    def test_bernoulli_matches_exhaustive_sum(self, rng):
        u, v = rng.uniform(-1, 1, size=(2, 10))
        k, r = rng.uniform(0, 5, size=2)
        dist = bernoulli(10, 0.5)
        closed = expectation_bernoulli(k, r, u, v, dist)
        assert closed == pytest.approx(bernoulli_expectation_exhaustive(k, r, u, v, dist), rel=1e-10)

    def test_mixture_matches_quadrature(self, rng):
        dist = random_mixture(rng, 2)
        u, v = rng.uniform(-1, 1, size=(2, 2))
        closed = expectation_gaussian_mixture(0.7, 0.3, u, v, dist)
        assert closed == pytest.approx(expectation_quadrature(0.7, 0.3, u, v, dist), rel=1e-8)

    def test_uniform_matches_quadrature(self, rng):
        dist = FAMILIES['uniform'](rng, 3)
        u, v = rng.uniform(-1, 1, size=(2, 3))
        k, r = rng.uniform(0, 5, size=2)
        closed = expectation_uniform(k, r, u, v, dist)
        assert closed == pytest.approx(expectation_quadrature(k, r, u, v, dist), rel=1e-8)

    def test_uniform_far_tail_stays_accurate(self):
        # Kernel centred far outside the box: erf difference of two values near 1.
        dist = uniform_box(1, -1, 1)
        closed = expectation_uniform(4.0, 0.0, [4.0], [0.0], dist)
        assert closed > 0
        assert closed == pytest.approx(expectation_quadrature(4.0, 0.0, [4.0], [0.0], dist), rel=1e-8)

    @pytest.mark.parametrize('family', sorted(FAMILIES))
    def test_swap_symmetry(self, family, rng):
        dist = FAMILIES[family](rng, 4)
        u, v = rng.uniform(-1, 1, size=(2, 4))
        assert expectation(0.4, 2.1, u, v, dist) == pytest.approx(expectation(2.1, 0.4, v, u, dist), rel=1e-12)

    @pytest.mark.parametrize('family', sorted(FAMILIES))
    def test_zero_r_ignores_v(self, family, rng):
        dist = FAMILIES[family](rng, 3)
        u = rng.normal(size=3)
        values = [expectation(1.3, 0.0, u, rng.normal(size=3) * 10, dist) for _ in range(4)]
        assert max(values) == pytest.approx(min(values), rel=1e-14)

    @pytest.mark.parametrize('family', sorted(FAMILIES))
    def test_values_in_unit_interval(self, family, rng):
        dist = FAMILIES[family](rng, 5)
        U = rng.normal(size=(6, 5))
        V = rng.normal(size=(4, 5))
        values = expectation_matrix(0.9, 0.2, U, V, dist)
        assert values.shape == (6, 4)
        assert np.all((values >= 0) & (values <= 1))

    def test_large_dimension_bernoulli_does_not_underflow(self):
        dist = bernoulli(26, 0.5)
        u = np.ones(26)
        value = expectation_bernoulli(3.0, 0.0, u, u, dist)
        assert value > 0
        # Product of per-dimension factors (1 + e^{-12})/2.
        assert value == pytest.approx(((1 + math.exp(-12.0)) / 2) ** 26, rel=1e-12)

    def test_argument_checks(self):
        with pytest.raises(InvalidArgumentError):
            expectation_bernoulli(-1.0, 0.0, [0.0], [0.0], bernoulli(1))
        with pytest.raises(DimensionMismatchError):
            expectation_bernoulli(1.0, 0.0, [0.0, 1.0], [0.0, 1.0], bernoulli(1))
        with pytest.raises(InvalidDistributionError):
            expectation_uniform(1.0, 0.0, [0.0], [0.0], bernoulli(1))


class TestObjective:
    def test_identical_networks_give_zero(self, network_factory):
        large = network_factory(5, 3)
        for dist in (std_normal(3), uniform_box(3, -1, 1), bernoulli(3)):
            assert pruning_objective(large, large, dist) == pytest.approx(0.0, abs=1e-9)

    def test_offsets_only(self):
        large = RbfNetwork(0.0, 2.0, [0.0, 0.0], [[0.0], [1.0]])
        small = RbfNetwork(0.3, 0.5, [0.0], [[0.2]])
        assert pruning_objective(large, small, std_normal(1)) == pytest.approx(2.25, rel=1e-14)

    def test_matches_exhaustive_average(self, network_factory):
        large = network_factory(4, 3)
        small = network_factory(2, 3)
        dist = bernoulli(3, 0.5)
        assert pruning_objective(large, small, dist) == pytest.approx(
            pruning_objective_exhaustive(large, small, dist), rel=1e-9)

    def test_cache_is_reused(self, network_factory):
        large = network_factory(6, 2)
        dist = std_normal(2)
        assert objective_for(large, dist).constants is objective_for(large, dist).constants
        assert objective_for(large, std_normal(2)).constants is not objective_for(large, dist).constants

    def test_cache_entries_die_with_their_networks(self, network_factory):
        dist = std_normal(2)
        small = network_factory(1, 2)
        gc.collect()
        before = cached_constant_count()
        for _ in range(20):
            pruning_objective(network_factory(3, 2), small, dist)
        gc.collect()
        assert cached_constant_count() == before

    def test_cache_entries_die_with_their_distributions(self, network_factory):
        large = network_factory(3, 2)
        small = network_factory(1, 2)
        gc.collect()
        before = cached_constant_count()
        for _ in range(20):
            pruning_objective(large, small, std_normal(2))
        gc.collect()
        assert cached_constant_count() == before

    def test_chunked_constant_matches_direct(self, monkeypatch, network_factory):
        large = network_factory(9, 2)
        dist = uniform_box(2, -2, 2)
        direct = PruningObjective(large, dist).large_contraction
        monkeypatch.setattr('rbfprune.core.pruning._CHUNK_ELEMENTS', 4)
        assert PruningObjective(large, dist).large_contraction == pytest.approx(direct, rel=1e-13)

    def test_dimension_mismatch(self, network_factory):
        with pytest.raises(DimensionMismatchError):
            pruning_objective(network_factory(3, 2), network_factory(1, 3), std_normal(2))
        with pytest.raises(DimensionMismatchError):
            pruning_objective(network_factory(3, 2), network_factory(1, 2), std_normal(3))

    def test_clamping(self, caplog):
        assert clamp_objective(-5e-10) == 0.0
        assert clamp_objective(0.25) == 0.25
        assert clamp_objective(-1e-6) == 0.0
        assert 'below cancellation tolerance' in caplog.text


class TestObjectiveGradients:
    def test_copy_is_a_stationary_point(self, network_factory):
        large = network_factory(4, 2)
        value, grads = pruning_objective_gradients(large, large, std_normal(2))
        assert value == pytest.approx(0.0, abs=1e-9)
        assert np.max(np.abs(grads.to_vector())) < 1e-8

    def test_zero_weights_give_structural_zeros(self, network_factory):
        large = network_factory(4, 2)
        small = network_factory(2, 2).replace(beta=np.zeros(2))
        _, grads = pruning_objective_gradients(large, small, uniform_box(2, -1, 1))
        assert grads.d_log_gamma == 0.0
        assert np.all(grads.d_theta == 0.0)

    @pytest.mark.parametrize('family', sorted(FAMILIES))
    @pytest.mark.parametrize('seed', range(3))
    def test_matches_finite_differences(self, family, seed):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(1, 4))
        dist = FAMILIES[family](rng, dim)
        large = random_network(rng, 4, dim, beta_scale=0.5)
        small = random_network(rng, 2, dim, beta_scale=0.5)
        objective = PruningObjective(large, dist)
        _, analytic = objective.value_and_gradients(small)
        reference = finite_difference_gradients(objective.raw_value, small)
        assert gradient_error(analytic, reference) <= 1e-5


    @pytest.mark.parametrize('family', sorted(FAMILIES))
    @pytest.mark.parametrize('chunk', [1, 20, 60])
    def test_row_chunks_do_not_change_results(self, monkeypatch, family, chunk):
        rng = np.random.default_rng(5)
        dist = FAMILIES[family](rng, 2)
        large = random_network(rng, 7, 2, beta_scale=0.5)
        small = random_network(rng, 5, 2, beta_scale=0.5)
        value, grads = PruningObjective(large, dist).value_and_gradients(small)
        monkeypatch.setattr('rbfprune.core.pruning._CHUNK_ELEMENTS', chunk)
        objective = PruningObjective(large, dist)
        chunked_value, chunked = objective.value_and_gradients(small)
        assert chunked_value == pytest.approx(value, rel=1e-12, abs=1e-14)
        assert objective.raw_value(small) == pytest.approx(value, rel=1e-12, abs=1e-14)
        np.testing.assert_allclose(chunked.to_vector(), grads.to_vector(), rtol=1e-10, atol=1e-13)


def quick_config(**kwargs):
    defaults = dict(target_centroids=2, restarts=3, lr_start=1e-2, lr_floor=1e-4, patience=5,
                    grace=5, seed=11, max_iterations=3000)
    defaults.update(kwargs)
    return PruneConfig(**defaults)


class TestPrune:
    def test_full_size_keeps_near_zero_objective(self, network_factory):
        large = network_factory(4, 2)
        result = prune(large, std_normal(2), quick_config(target_centroids=4, restarts=2))
        assert result.objective <= 1e-9
        assert result.network.num_centroids == 4

    def test_restarts_improve_on_initialization(self, network_factory):
        large = network_factory(8, 2)
        result = prune(large, std_normal(2), quick_config())
        for report in result.restarts:
            assert not report.failed
            assert report.final_objective <= report.initial_objective
            assert report.stop_reason in (StopReason.LR_FLOOR, StopReason.MAX_ITERATIONS)
            recorded = [h.best_objective for h in report.history]
            assert np.all(np.diff(recorded) <= 0)
            assert recorded[0] == report.history[0].objective
            assert all(h.best_objective <= h.objective for h in report.history)
            assert report.final_objective == pytest.approx(max(recorded[-1], 0.0), abs=1e-15)
        assert result.objective == min(r.final_objective for r in result.restarts)
        assert pruning_objective(large, result.network, std_normal(2)) == pytest.approx(
            result.objective, rel=1e-12, abs=1e-15)
        assert result.sqrt_objective == pytest.approx(math.sqrt(result.objective))

    def test_initial_centroids_come_from_large_network(self, network_factory):
        large = network_factory(6, 3)
        result = prune(large, bernoulli(3), quick_config(max_iterations=1))
        for report in result.restarts:
            assert len(set(report.centroid_indices)) == 2
            assert all(0 <= i < 6 for i in report.centroid_indices)
            assert report.stop_reason is StopReason.MAX_ITERATIONS

    def test_more_restarts_never_worse(self, network_factory):
        large = network_factory(8, 1)
        one = prune(large, uniform_box(1, -4, 4), quick_config(restarts=1))
        many = prune(large, uniform_box(1, -4, 4), quick_config(restarts=4))
        assert many.objective <= one.objective
        assert many.restarts[0].final_objective == one.restarts[0].final_objective

    def test_deterministic_and_thread_independent(self, network_factory):
        large = network_factory(7, 2)
        serial = prune(large, std_normal(2), quick_config())
        again = prune(large, std_normal(2), quick_config())
        threaded = prune(large, std_normal(2), quick_config(threads=3))
        assert serial.network.equals(again.network)
        assert serial.network.equals(threaded.network)
        assert serial.best_restart == threaded.best_restart

    def test_rejects_too_many_centroids(self, network_factory):
        with pytest.raises(InvalidArgumentError):
            prune(network_factory(3, 1), std_normal(1), quick_config(target_centroids=4))

    def test_all_failed_restarts_raise(self, monkeypatch, network_factory):
        large = network_factory(4, 1)

        def broken(self, small):
            return float("nan"), None

        monkeypatch.setattr(PruningObjective, 'value_and_gradients', broken)
        with pytest.raises(NonFiniteValueError):
            prune(large, std_normal(1), quick_config())

    def test_config_validation(self):
        with pytest.raises(InvalidArgumentError):
            PruneConfig(target_centroids=0)
        with pytest.raises(InvalidArgumentError):
            PruneConfig(target_centroids=2, restarts=0)
        with pytest.raises(InvalidArgumentError):
            PruneConfig(target_centroids=2, lr_start=1e-6)


def test_centroid_feature_profile():
    net = RbfNetwork(0.0, 0.0, [1.0, 1.0], [[3.0, 0.5], [-1.0, 0.5]])
    profile = centroid_feature_profile(net, clip=2.0)
    assert profile['mean'] == pytest.approx([0.75, 0.25])
    assert profile['std'] == pytest.approx([0.25, 0.0])
    assert profile['normalized_mean'] == pytest.approx([1.0, 1.0 / 3.0])
    with pytest.raises(InvalidArgumentError):
        centroid_feature_profile(net, clip=0.0)
