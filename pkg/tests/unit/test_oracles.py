import math

import numpy as np
import pytest

from rbfprune.core.distributions import Bernoulli, GaussianMixture, bernoulli, std_normal, uniform_box
from rbfprune.core.exceptions import (
    EnumerationLimitError, InvalidArgumentError, InvalidDistributionError,
)
from rbfprune.core.model import Dataset, RbfNetwork, forward_batch, mse_loss
from rbfprune.core.oracles import (
    MAX_ENUMERATION_DIM, bernoulli_expectation_exhaustive, bernoulli_log_expectation_exhaustive,
    expectation_quadrature, finite_difference_gradients, log_expectation_quadrature, mc_expectation,
    mc_pruning_objective, pruning_objective_exhaustive,
)
from rbfprune.core.pruning import expectation_bernoulli, kernel_terms, pruning_objective


class TestExhaustive:
    def test_two_dimensional_point_mass(self):
        # Only x = (+1, +1) has probability; its exponent is -1*(0 + 4) - 0.
        value = bernoulli_expectation_exhaustive(1.0, 0.0, [1.0, -1.0], [0.0, 0.0], Bernoulli([1.0, 1.0]))
        assert value == pytest.approx(math.exp(-4.0), rel=1e-15)

    @pytest.mark.parametrize('dim', [10, 12])
    def test_agrees_with_closed_form(self, dim, rng):
        dist = Bernoulli(rng.uniform(0.05, 0.95, size=dim))
        u, v = rng.uniform(-1, 1, size=(2, dim))
        k, r = rng.uniform(0.1, 3.0, size=2)
        assert bernoulli_log_expectation_exhaustive(k, r, u, v, dist) == pytest.approx(
            math.log(expectation_bernoulli(k, r, u, v, dist)), abs=1e-10)

    def test_dimension_limit(self):
        dim = MAX_ENUMERATION_DIM + 1
        with pytest.raises(EnumerationLimitError):
            bernoulli_expectation_exhaustive(1.0, 1.0, np.zeros(dim), np.zeros(dim), bernoulli(dim))

    def test_needs_bernoulli(self):
        with pytest.raises(InvalidDistributionError):
            bernoulli_expectation_exhaustive(1.0, 1.0, [0.0], [0.0], std_normal(1))

    def test_objective_of_identical_networks(self, network_factory):
        large = network_factory(3, 4)
        assert pruning_objective_exhaustive(large, large, bernoulli(4)) == pytest.approx(0.0, abs=1e-24)

    def test_objective_offsets_only(self):
        large = RbfNetwork(0.0, 2.0, [0.0], [[0.0, 0.0]])
        small = RbfNetwork(0.0, 0.5, [0.0], [[1.0, 1.0]])
        assert pruning_objective_exhaustive(large, small, bernoulli(2, 0.3)) == pytest.approx(2.25, rel=1e-14)


class TestQuadrature:
    def test_standard_normal(self):
        assert expectation_quadrature(1.0, 0.0, [0.0], [0.0], std_normal(1)) == pytest.approx(
            1.0 / math.sqrt(3.0), rel=1e-10)

    def test_uniform(self):
        assert expectation_quadrature(1.0, 0.0, [0.0], [0.0], uniform_box(1, -1, 1)) == pytest.approx(
            0.746824132812427, rel=1e-10)

    def test_log_is_additive_over_dimensions(self):
        one = log_expectation_quadrature(0.5, 0.5, [0.2], [-0.3], std_normal(1))
        three = log_expectation_quadrature(0.5, 0.5, [0.2] * 3, [-0.3] * 3, std_normal(3))
        assert three == pytest.approx(3 * one, rel=1e-10)

    def test_far_kernel_does_not_underflow(self):
        log_value = log_expectation_quadrature(50.0, 0.0, [30.0], [0.0], uniform_box(1, -1, 1))
        assert math.isfinite(log_value)
        assert log_value < -1000

    def test_far_kernel_under_gaussian_does_not_underflow(self):
        log_value = log_expectation_quadrature(50.0, 0.0, [30.0], [0.0], std_normal(1))
        assert log_value == pytest.approx(-0.5 * math.log(101.0) - 50.0 * 900.0 / 101.0, rel=1e-9)

    def test_far_kernel_under_mixture_matches_closed_form(self):
        dist = GaussianMixture(np.array([[0.3, 0.7]]), np.array([[-1.0, 2.0]]), np.array([[0.5, 0.25]]))
        log_value = log_expectation_quadrature(40.0, 5.0, [25.0], [-20.0], dist)
        expected = kernel_terms(40.0, 5.0, [[25.0]], [[-20.0]], dist).log_value[0, 0]
        assert math.isfinite(log_value)
        assert log_value == pytest.approx(expected, rel=1e-8)

    def test_rejects_bernoulli(self):
        with pytest.raises(InvalidDistributionError):
            expectation_quadrature(1.0, 0.0, [0.0], [0.0], bernoulli(1))

    def test_rejects_negative_scale(self):
        with pytest.raises(InvalidArgumentError):
            expectation_quadrature(-1.0, 0.0, [0.0], [0.0], std_normal(1))


class TestMonteCarlo:
    def test_zero_scales_are_exact(self):
        mean, stderr = mc_expectation(0.0, 0.0, [0.5, 0.5], [0.1, 0.2], std_normal(2), samples=1000, seed=3)
        assert mean == 1.0
        assert stderr == 0.0

    def test_estimate_within_error_bars(self):
        mean, stderr = mc_expectation(1.0, 0.0, [0.0], [0.0], std_normal(1), samples=200_000, seed=5)
        assert abs(mean - 1.0 / math.sqrt(3.0)) <= 5 * stderr

    def test_stderr_shrinks_with_samples(self):
        dist = uniform_box(2, -1, 1)
        _, small = mc_expectation(1.0, 0.5, [0.1, 0.0], [0.0, -0.2], dist, samples=1000, seed=1)
        _, large = mc_expectation(1.0, 0.5, [0.1, 0.0], [0.0, -0.2], dist, samples=100_000, seed=1)
        assert large == pytest.approx(small / 10.0, rel=0.2)

    def test_seeded_draws_repeat(self):
        first = mc_expectation(1.0, 1.0, [0.0], [1.0], std_normal(1), samples=500, seed=9)
        second = mc_expectation(1.0, 1.0, [0.0], [1.0], std_normal(1), samples=500, seed=9)
        assert first == second

    def test_too_few_samples(self):
        with pytest.raises(InvalidArgumentError):
            mc_expectation(1.0, 0.0, [0.0], [0.0], std_normal(1), samples=99, seed=0)

    def test_objective_matches_closed_form(self, network_factory):
        large = network_factory(5, 3)
        small = network_factory(2, 3)
        dist = uniform_box(3, -2, 2)
        mean, stderr = mc_pruning_objective(large, small, dist, samples=100_000, seed=4)
        assert abs(mean - pruning_objective(large, small, dist)) <= 5 * stderr

    def test_objective_estimate_is_sample_mse(self, network_factory):
        large = network_factory(3, 2)
        small = network_factory(1, 2)
        dist = std_normal(2)
        mean, _ = mc_pruning_objective(large, small, dist, samples=100, seed=0)
        x = dist.sample(100, np.random.default_rng(0))
        targets = forward_batch(large, x)
        assert mean == pytest.approx(mse_loss(small, Dataset(x, targets)), rel=1e-12)


class TestFiniteDifferences:
    def test_quadratic_in_alpha(self, network_factory):
        net = network_factory(2, 2)
        grads = finite_difference_gradients(lambda n: (n.alpha - 3.0) ** 2, net)
        assert grads.d_alpha == pytest.approx(2.0 * (net.alpha - 3.0), rel=1e-7)
        assert np.all(grads.d_beta == 0.0)
        assert np.all(grads.d_theta == 0.0)

    def test_rejects_bad_step(self, network_factory):
        with pytest.raises(InvalidArgumentError):
            finite_difference_gradients(lambda n: 0.0, network_factory(1, 1), step=0.0)
