"""
Seeded conformance suites: closed forms and analytic gradients against the
reference computations in rbfprune.core.oracles.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional

import numpy as np

from .distributions import Bernoulli, GaussianMixture, UniformBox
from .exceptions import ConformanceError, InvalidArgumentError
from .gradients import ParamGradients, loss_gradients
from .model import Dataset, RbfNetwork
from .oracles import (
    bernoulli_log_expectation_exhaustive,
    finite_difference_gradients,
    log_expectation_quadrature,
    pruning_objective_exhaustive,
)
from .pruning import PruningObjective, kernel_terms

logger = logging.getLogger(__name__)


class Suite(str, Enum):
    BERNOULLI = "bernoulli"
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    OBJECTIVE = "objective"
    GRADIENTS = "gradients"
    ALL = "all"


@dataclass
class SuiteResult:
    """Worst relative error of one suite over its case grid."""

    suite: str
    cases: int
    max_error: float
    tolerance: float
    worst_case: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def raise_for_failure(self) -> None:
        if not self.passed:
            raise ConformanceError(self.suite, self.max_error, self.tolerance)

    def to_dict(self) -> Dict[str, object]:
        return {'suite': self.suite, 'cases': self.cases, 'max_error': self.max_error,
                'tolerance': self.tolerance, 'passed': self.passed}


def _log_relative_error(closed_log: float, oracle_log: float) -> float:
    return abs(math.expm1(closed_log - oracle_log))


def _closed_log(k: float, r: float, u: np.ndarray, v: np.ndarray, dist) -> float:
    return float(kernel_terms(k, r, u[None, :], v[None, :], dist).log_value[0, 0])


class _Tracker:
    def __init__(self, suite: Suite, tolerance: float):
        self.suite = suite
        self.tolerance = tolerance
        self.cases = 0
        self.max_error = 0.0
        self.worst: Dict[str, object] = {}

    def record(self, error: float, **case) -> None:
        self.cases += 1
        if not error <= self.max_error:
            self.max_error = error
            self.worst = case

    def result(self) -> SuiteResult:
        result = SuiteResult(self.suite.value, self.cases, self.max_error, self.tolerance, self.worst)
        if not result.passed:
            logger.debug("Worst %s case: %s", self.suite.value, self.worst)
        return result


def _bernoulli_suite(rng: np.random.Generator, cases: int) -> SuiteResult:
    tracker = _Tracker(Suite.BERNOULLI, 1e-10)
    for _ in range(cases):
        dim = int(rng.integers(1, 13))
        k, r = rng.uniform(0.0, 5.0, size=2)
        u, v = rng.uniform(-1.0, 1.0, size=(2, dim))
        dist = Bernoulli(rng.uniform(0.0, 1.0, size=dim))
        error = _log_relative_error(_closed_log(k, r, u, v, dist),
                                    bernoulli_log_expectation_exhaustive(k, r, u, v, dist))
        tracker.record(error, dim=dim, k=k, r=r, u=u.tolist(), v=v.tolist(), q=dist.q.tolist())
    return tracker.result()


def _uniform_suite(rng: np.random.Generator, cases: int) -> SuiteResult:
    tracker = _Tracker(Suite.UNIFORM, 1e-8)
    for _ in range(cases):
        dim = int(rng.integers(1, 7))
        k, r = rng.uniform(0.0, 5.0, size=2)
        u, v = rng.uniform(-2.0, 2.0, size=(2, dim))
        low = rng.uniform(-2.0, 0.0, size=dim)
        dist = UniformBox(low, low + rng.uniform(0.5, 3.0, size=dim))
        error = _log_relative_error(_closed_log(k, r, u, v, dist),
                                    log_expectation_quadrature(k, r, u, v, dist))
        tracker.record(error, dim=dim, k=k, r=r, u=u.tolist(), v=v.tolist(),
                       low=dist.low.tolist(), high=dist.high.tolist())
    return tracker.result()


def _random_mixture(rng: np.random.Generator, dim: int) -> GaussianMixture:
    counts = rng.integers(1, 4, size=dim)
    weights = [rng.dirichlet(np.ones(c)).tolist() for c in counts]
    # Renormalize so each row sums to 1 within the distribution's tolerance.
    weights = [[w / math.fsum(row) for w in row] for row in weights]
    means = [rng.uniform(-2.0, 2.0, size=c).tolist() for c in counts]
    variances = [rng.uniform(0.2, 2.0, size=c).tolist() for c in counts]
    return GaussianMixture.from_components(weights, means, variances)


def _gaussian_suite(rng: np.random.Generator, cases: int) -> SuiteResult:
    tracker = _Tracker(Suite.GAUSSIAN, 1e-8)
    for _ in range(cases):
        dim = int(rng.integers(1, 7))
        k, r = rng.uniform(0.0, 5.0, size=2)
        u, v = rng.uniform(-2.0, 2.0, size=(2, dim))
        dist = _random_mixture(rng, dim)
        error = _log_relative_error(_closed_log(k, r, u, v, dist),
                                    log_expectation_quadrature(k, r, u, v, dist))
        tracker.record(error, dim=dim, k=k, r=r, u=u.tolist(), v=v.tolist(), dist=dist.to_dict())
    return tracker.result()


def random_network(rng: np.random.Generator, num_centroids: int, dim: int,
                   theta_scale: float = 1.0, beta_scale: float = 1.0) -> RbfNetwork:
    return RbfNetwork(
        log_gamma=rng.uniform(-1.0, 0.5),
        alpha=rng.normal(0.0, 1.0),
        beta=rng.normal(0.0, beta_scale, size=num_centroids),
        theta=rng.uniform(-theta_scale, theta_scale, size=(num_centroids, dim)),
    )


def _objective_suite(rng: np.random.Generator, cases: int) -> SuiteResult:
    tracker = _Tracker(Suite.OBJECTIVE, 1e-9)
    for _ in range(cases):
        dim = int(rng.integers(1, 11))
        large = random_network(rng, int(rng.integers(1, 9)), dim)
        small = random_network(rng, int(rng.integers(1, 5)), dim)
        dist = Bernoulli(np.full(dim, 0.5))
        reference = pruning_objective_exhaustive(large, small, dist)
        closed = PruningObjective(large, dist).raw_value(small)
        tracker.record(abs(closed - reference) / max(abs(reference), 1e-300), dim=dim,
                       large_k=large.num_centroids, small_m=small.num_centroids)
    return tracker.result()


def gradient_error(analytic: ParamGradients, reference: ParamGradients, small_cutoff: float = 1e-3) -> float:
    """
    Worst component error on the relative scale.

    Components of the reference smaller than small_cutoff are compared in
    absolute terms scaled by small_cutoff, so a relative tolerance t implies
    an absolute tolerance t * small_cutoff for them.
    """
    a = analytic.to_vector()
    f = reference.to_vector()
    return float(np.max(np.abs(a - f) / np.maximum(np.abs(f), small_cutoff)))


def _gradient_suite(rng: np.random.Generator, cases: int) -> SuiteResult:
    tracker = _Tracker(Suite.GRADIENTS, 1e-5)
    for _ in range(cases):
        dim = int(rng.integers(1, 5))
        net = random_network(rng, int(rng.integers(1, 6)), dim, beta_scale=0.5)
        inputs = rng.uniform(-1.5, 1.5, size=(20, dim))
        batch = Dataset(inputs, np.sin(inputs.sum(axis=1)))
        decay = float(rng.choice([0.0, 1e-5, 1e-2]))
        _, analytic = loss_gradients(net, batch, decay)
        reference = finite_difference_gradients(lambda n: loss_gradients(n, batch, decay)[0], net)
        tracker.record(gradient_error(analytic, reference), objective='training_loss', dim=dim)

    families: List[Callable[[int], object]] = [
        lambda d: _random_mixture(rng, d),
        lambda d: UniformBox(np.full(d, -1.5), np.full(d, 1.5)),
        lambda d: Bernoulli(rng.uniform(0.1, 0.9, size=d)),
    ]
    for case in range(cases):
        dim = int(rng.integers(1, 5))
        dist = families[case % len(families)](dim)
        large = random_network(rng, int(rng.integers(2, 7)), dim, beta_scale=0.5)
        small = random_network(rng, int(rng.integers(1, 4)), dim, beta_scale=0.5)
        objective = PruningObjective(large, dist)
        _, analytic = objective.value_and_gradients(small)
        reference = finite_difference_gradients(objective.raw_value, small)
        tracker.record(gradient_error(analytic, reference), objective='pruning',
                       family=type(dist).__name__, dim=dim)
    return tracker.result()


_SUITES = {
    Suite.BERNOULLI: (_bernoulli_suite, 1000),
    Suite.UNIFORM: (_uniform_suite, 500),
    Suite.GAUSSIAN: (_gaussian_suite, 500),
    Suite.OBJECTIVE: (_objective_suite, 200),
    Suite.GRADIENTS: (_gradient_suite, 100),
}


def run_suite(name: str, seed: int = 0, cases: Optional[int] = None) -> List[SuiteResult]:
    """
    Run one suite (or all of them) and return its results.

    Args:
        name: Suite name or 'all'
        seed: Seed of the case generator; suite i of 'all' uses (seed, i)
        cases: Override the default case count of every selected suite

    Returns:
        One SuiteResult per suite that ran
    """
    try:
        suite = Suite(name)
    except ValueError:
        raise InvalidArgumentError('suite', name, f"expected one of {[s.value for s in Suite]}")
    if cases is not None and cases < 1:
        raise InvalidArgumentError('cases', cases, "must be >= 1")

    selected = list(_SUITES) if suite is Suite.ALL else [suite]
    results = []
    for chosen in selected:
        runner, default_cases = _SUITES[chosen]
        rng = np.random.default_rng([seed, list(_SUITES).index(chosen)])
        result = runner(rng, cases or default_cases)
        logger.info("Suite %s: %d cases, max relative error %.3g (tolerance %.1g)",
                    result.suite, result.cases, result.max_error, result.tolerance)
        results.append(result)
    return results
