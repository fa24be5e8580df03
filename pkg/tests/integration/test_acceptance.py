"""
Long end-to-end runs. Deselect with -m "not slow".
"""
import statistics
import time

import numpy as np
import pytest

from rbfprune.core.distributions import bernoulli, std_normal
from rbfprune.core.model import Dataset
from rbfprune.core.oracles import mc_pruning_objective
from rbfprune.core.pruning import PruneConfig, objective_for, prune, pruning_objective
from rbfprune.core.training import TrainConfig, split_dataset, train
from rbfprune.utils.io import read_report

pytestmark = [pytest.mark.integration, pytest.mark.slow]


def test_toy_train_prune_and_curves(tmp_path, run_cli):
    started = time.perf_counter()
    data = tmp_path / 'toy.csv'
    config = tmp_path / 'run.json'
    config.write_text('{"split": {"train": 0.7, "validation": 0.15, "test": 0.15}}')
    assert run_cli('gen-toy', '--n', 1000, '--seed', 7, '--out', data).code == 0

    large = tmp_path / 'large.json'
    trained = run_cli('train', '--data', data, '--config', config, '--centroids', 100,
                      '--model-out', large, '--seed', 0)
    assert trained.code == 0, trained.err
    assert trained.json['test_rmse'] <= 0.02

    pruned = {}
    for name, dist in (('normal', 'std_normal'), ('uniform', 'uniform(-4,4)')):
        out, report = tmp_path / f'{name}.json', tmp_path / f'{name}.jsonl'
        result = run_cli('prune', '--model', large, '--centroids', 3, '--restarts', 10, '--dist', dist,
                         '--max-iterations', 30_000, '--model-out', out, '--report-out', report)
        assert result.code == 0, result.err
        best = [r for r in read_report(report) if r['type'] == 'restart'][result.json['best_restart']]
        assert np.isfinite(result.json['objective'])
        assert result.json['objective'] < best['initial_objective']
        pruned[name] = out

    curve = tmp_path / 'curve.csv'
    assert run_cli('curve', '--model', large, '--model', pruned['normal'], '--model', pruned['uniform'],
                   '--from', -2, '--to', 2, '--steps', 401, '--out', curve).code == 0
    table = np.loadtxt(curve, delimiter=',', skiprows=1)
    assert np.max(np.abs(table[:, 1] - table[:, 2])) <= 0.1
    assert time.perf_counter() - started < 300


def test_large_dimension_bernoulli_matches_monte_carlo():
    rng = np.random.default_rng(26)
    inputs = np.where(rng.random((4000, 26)) < 0.5, 1.0, -1.0)
    weights = rng.normal(size=26) / np.sqrt(26)
    data = Dataset(inputs, np.tanh(inputs @ weights) + 0.1 * inputs[:, 0] * inputs[:, 1])
    train_part, val_part, _ = split_dataset(data, (0.8, 0.2, 0.0), seed=0)
    large, _ = train(train_part, val_part, TrainConfig(num_centroids=256, max_epochs=40, seed=0))

    dist = bernoulli(26, 0.5)
    result = prune(large, dist, PruneConfig(target_centroids=16, restarts=2, max_iterations=2000,
                                            record_history=False))
    closed = pruning_objective(large, result.network, dist)
    mean, stderr = mc_pruning_objective(large, result.network, dist, samples=1_000_000, seed=1)
    assert closed > 0
    assert abs(closed - mean) <= 4 * stderr


def _evaluation_time(large, small, dist, repeats=30):
    objective = objective_for(large, dist)
    objective.value(small)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        objective.value(small)
        times.append(time.perf_counter() - start)
    return statistics.median(times)


@pytest.mark.performance
@pytest.mark.parametrize('grow', ['dim', 'centroids'])
def test_objective_cost_grows_linearly(network_factory, grow):
    if grow == 'dim':
        sizes = [(128, 16, 32), (128, 16, 64)]
    else:
        sizes = [(128, 32, 32), (128, 64, 32)]
    timings = []
    for k, m, d in sizes:
        large, small = network_factory(k, d), network_factory(m, d)
        timings.append(_evaluation_time(large, small, std_normal(d)))
    assert timings[1] <= 2.0 * 1.3 * timings[0]
