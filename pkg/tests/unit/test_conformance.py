import numpy as np
import pytest

from rbfprune.core.conformance import SuiteResult, gradient_error, run_suite
from rbfprune.core.exceptions import ConformanceError, InvalidArgumentError
from rbfprune.core.gradients import ParamGradients


@pytest.mark.parametrize('suite, tolerance', [
    ('bernoulli', 1e-10),
    ('uniform', 1e-8),
    ('gaussian', 1e-8),
    ('objective', 1e-9),
    ('gradients', 1e-5),
])
def test_suites_pass_on_a_few_cases(suite, tolerance):
    [result] = run_suite(suite, seed=1, cases=5)
    assert result.suite == suite
    assert result.tolerance == tolerance
    assert result.passed, result.worst_case


def test_all_runs_every_suite():
    results = run_suite('all', seed=0, cases=2)
    assert [r.suite for r in results] == ['bernoulli', 'uniform', 'gaussian', 'objective', 'gradients']


def test_seeded_results_repeat():
    assert run_suite('uniform', seed=4, cases=3)[0].max_error == run_suite('uniform', seed=4, cases=3)[0].max_error


def test_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        run_suite('poisson')
    with pytest.raises(InvalidArgumentError):
        run_suite('bernoulli', cases=0)


def test_failure_raises():
    result = SuiteResult('uniform', cases=1, max_error=1e-3, tolerance=1e-8)
    assert not result.passed
    assert result.to_dict()['passed'] is False
    with pytest.raises(ConformanceError):
        result.raise_for_failure()


def test_gradient_error_uses_absolute_scale_for_small_components():
    reference = ParamGradients(d_log_gamma=1e-9, d_alpha=2.0, d_beta=np.zeros(1), d_theta=np.zeros((1, 1)))
    analytic = ParamGradients(d_log_gamma=2e-9, d_alpha=2.0 * (1 + 1e-7), d_beta=np.zeros(1),
                              d_theta=np.zeros((1, 1)))
    assert gradient_error(analytic, reference) == pytest.approx(1e-6)


@pytest.mark.slow
@pytest.mark.parametrize('suite', ['bernoulli', 'uniform', 'gaussian', 'objective', 'gradients'])
def test_full_suites(suite):
    [result] = run_suite(suite, seed=0)
    assert result.passed, result.worst_case
