"""
Minibatch training of RBF networks with validation-driven early stopping.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidArgumentError,
    NonFiniteValueError,
)
from .gradients import loss_gradients
from .model import Dataset, RbfNetwork, mse_loss
from .optimizer import AdamState, Decision, ScheduleState, StopReason, adam_step, schedule_update

logger = logging.getLogger(__name__)

SeedLike = Union[int, Sequence[int]]

_INIT_BETA_SCALE = 0.01
_JITTER_SCALE = 1e-3


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters."""

    num_centroids: int
    batch_size: int = 64
    weight_decay: float = 1e-5
    lr_start: float = 1e-2
    lr_floor: float = 1e-4
    patience: int = 10
    grace: int = 10
    seed: int = 0
    deterministic: bool = True
    max_epochs: int = 10_000
    threads: int = 1

    def __post_init__(self):
        if self.num_centroids < 1:
            raise InvalidArgumentError('num_centroids', self.num_centroids, "must be >= 1")
        if self.batch_size < 1:
            raise InvalidArgumentError('batch_size', self.batch_size, "must be >= 1")
        if self.weight_decay < 0:
            raise InvalidArgumentError('weight_decay', self.weight_decay, "must be >= 0")
        if not (self.lr_start >= self.lr_floor > 0):
            raise InvalidArgumentError('lr_start', self.lr_start, "need lr_start >= lr_floor > 0")
        if self.max_epochs < 1:
            raise InvalidArgumentError('max_epochs', self.max_epochs, "must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    validation_mse: float
    lr: float

    def to_dict(self) -> Dict[str, float]:
        return {'epoch': self.epoch, 'train_loss': self.train_loss,
                'validation_mse': self.validation_mse, 'lr': self.lr}


@dataclass
class FitReport:
    """Per-epoch history of one training run."""

    records: List[EpochRecord] = field(default_factory=list)
    stop_reason: Optional[StopReason] = None
    final_validation_mse: float = math.inf
    best_epoch: int = -1
    wall_time: float = field(default=0.0, compare=False)

    @property
    def epochs(self) -> int:
        return len(self.records)

    def summary(self) -> Dict[str, object]:
        return {
            'epochs': self.epochs,
            'best_epoch': self.best_epoch,
            'final_validation_mse': self.final_validation_mse,
            'stop_reason': self.stop_reason.value if self.stop_reason else None,
            'wall_time': self.wall_time,
        }


def init_network(train_data: Dataset, num_centroids: int, seed: SeedLike) -> RbfNetwork:
    """
    Data-driven starting point.

    Centroids are training inputs drawn without replacement (with replacement
    plus a small jitter when there are fewer rows than centroids); weights
    are N(0, 0.01^2); alpha is the mean response and log_gamma is 0.
    """
    if num_centroids < 1:
        raise InvalidArgumentError('num_centroids', num_centroids, "must be >= 1")
    n = len(train_data)
    if n == 0:
        raise EmptyDatasetError('training set')
    rng = np.random.default_rng(seed)
    if n >= num_centroids:
        rows = rng.choice(n, size=num_centroids, replace=False)
        theta = train_data.inputs[rows]
    else:
        rows = rng.choice(n, size=num_centroids, replace=True)
        theta = train_data.inputs[rows] + rng.normal(0.0, _JITTER_SCALE, size=(num_centroids, train_data.dim))
    beta = rng.normal(0.0, _INIT_BETA_SCALE, size=num_centroids)
    return RbfNetwork(log_gamma=0.0, alpha=float(np.mean(train_data.responses)), beta=beta, theta=theta)


def train(train_data: Dataset, val_data: Dataset, config: TrainConfig) -> Tuple[RbfNetwork, FitReport]:
    """
    Train with shuffled minibatch Adam and return the best-validation snapshot.

    After every epoch the validation MSE drives the learning-rate schedule;
    training stops once the next reduction would go below config.lr_floor or
    after config.max_epochs epochs. The last partial minibatch is kept.

    Raises:
        NonFiniteValueError: a batch loss or validation MSE is NaN or infinite
    """
    if len(train_data) == 0:
        raise EmptyDatasetError('training set')
    if len(val_data) == 0:
        raise EmptyDatasetError('validation set')
    if val_data.dim != train_data.dim:
        raise DimensionMismatchError('validation columns', train_data.dim, val_data.dim)

    started = time.perf_counter()
    net = init_network(train_data, config.num_centroids, [config.seed, 0])
    shuffle_rng = np.random.default_rng([config.seed, 1])
    schedule = ScheduleState(lr_start=config.lr_start, floor_lr=config.lr_floor,
                             patience=config.patience, grace=config.grace)
    adam = AdamState.for_network(net, schedule.current_lr)
    report = FitReport()
    n = len(train_data)

    logger.info("Training K=%d on %d rows (D=%d, batch %d)", config.num_centroids, n,
                train_data.dim, config.batch_size)
    for epoch in range(config.max_epochs):
        lr = schedule.current_lr
        adam = adam.with_lr(lr)
        order = shuffle_rng.permutation(n)
        weighted_loss = 0.0
        for lo in range(0, n, config.batch_size):
            batch = train_data.subset(order[lo:lo + config.batch_size])
            loss, grads = loss_gradients(net, batch, config.weight_decay)
            if not (math.isfinite(loss) and grads.is_finite()):
                raise NonFiniteValueError('training loss', last_good=epoch - 1, value=loss)
            weighted_loss += loss * len(batch)
            net, adam = adam_step(net, grads, adam)

        val_mse = mse_loss(net, val_data, threads=config.threads)
        if not math.isfinite(val_mse):
            raise NonFiniteValueError('validation MSE', last_good=epoch - 1, value=val_mse)
        report.records.append(EpochRecord(epoch, weighted_loss / n, val_mse, lr))
        improved = val_mse < schedule.best_metric
        decision, schedule = schedule_update(schedule, val_mse, net)
        if improved:
            report.best_epoch = epoch
        logger.debug("epoch %d: train %.6g, validation %.6g, lr %.1e", epoch, weighted_loss / n,
                     val_mse, lr, extra={'epoch': epoch})

        if decision is Decision.STOP:
            report.stop_reason = StopReason.LR_FLOOR
            break
        if decision is Decision.REDUCE:
            logger.info("Epoch %d: learning rate reduced to %.1e", epoch, schedule.current_lr,
                        extra={'epoch': epoch})
    else:
        report.stop_reason = StopReason.MAX_EPOCHS

    report.final_validation_mse = schedule.best_metric
    report.wall_time = time.perf_counter() - started
    logger.info("Training stopped after %d epochs (%s); best validation MSE %.6g at epoch %d",
                report.epochs, report.stop_reason.value, report.final_validation_mse, report.best_epoch)
    return schedule.best_params, report


def toy_target(x: np.ndarray) -> np.ndarray:
    return np.exp(-x ** 2) + 0.2 * np.cos(4.0 * x)


def make_toy_dataset(n: int, seed: SeedLike) -> Dataset:
    """n noise-free samples of exp(-x^2) + 0.2 cos(4x) with x ~ U(-4, 4)."""
    if n < 1:
        raise InvalidArgumentError('n', n, "must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-4.0, 4.0, size=n)
    return Dataset(x[:, None], toy_target(x), ('x',))


SplitSize = Union[int, float, None]


def _resolve_sizes(n: int, sizes: Sequence[SplitSize]) -> Tuple[int, int, int]:
    if len(sizes) != 3:
        raise InvalidArgumentError('split sizes', tuple(sizes), "need (train, validation, test)")
    if sum(s is None for s in sizes) > 1:
        raise InvalidArgumentError('split sizes', tuple(sizes), "at most one part may be 'rest'")

    resolved: List[Optional[int]] = [None, None, None]
    fractions: List[Tuple[int, float]] = []
    for index, size in enumerate(sizes):
        if size is None:
            continue
        if isinstance(size, (int, np.integer)) and not isinstance(size, bool):
            if size < 0:
                raise InvalidArgumentError('split sizes', tuple(sizes), "counts must be >= 0")
            resolved[index] = int(size)
        else:
            fraction = float(size)
            if not 0.0 <= fraction <= 1.0:
                raise InvalidArgumentError('split sizes', tuple(sizes), "fractions must lie in [0, 1]")
            fractions.append((index, fraction))

    counted = sum(s for s in resolved if s is not None)
    fractional = _round_half_up(n * sum(f for _, f in fractions))
    if counted + fractional > n:
        raise InvalidArgumentError('split sizes', tuple(sizes),
                                   f"parts need {counted + fractional} rows but only {n} exist")

    # Part j of the fractional parts ends at round(n * (f_1 + ... + f_j)). A part
    # with a positive fraction keeps one row as long as later ones can too.
    room = n - counted
    cumulative = 0.0
    end = 0
    for j, (index, fraction) in enumerate(fractions):
        start = end
        cumulative += fraction
        end = _round_half_up(n * cumulative)
        if fraction > 0:
            end = max(end, start + 1)
        later = sum(1 for _, f in fractions[j + 1:] if f > 0)
        end = max(min(end, room - later), start)
        resolved[index] = end - start
    rest = room - end
    return tuple(rest if s is None else s for s in resolved)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_dataset(data: Dataset, sizes: Sequence[SplitSize], seed: SeedLike) -> Tuple[Dataset, Dataset, Dataset]:
    """
    Seeded disjoint train/validation/test split.

    Each entry of sizes is a fraction of N (float), a row count (int) or None
    for "the remaining rows". Rows left over after fractions are rounded are
    not used.
    """
    n_train, n_val, n_test = _resolve_sizes(len(data), sizes)
    order = np.random.default_rng(seed).permutation(len(data))
    train_rows = order[:n_train]
    val_rows = order[n_train:n_train + n_val]
    test_rows = order[n_train + n_val:n_train + n_val + n_test]
    return data.subset(train_rows), data.subset(val_rows), data.subset(test_rows)


@dataclass
class RepeatedSplitResult:
    """Test RMSE of each repeat and their mean / sample standard deviation."""

    test_rmse: List[float]
    reports: List[FitReport] = field(default_factory=list, repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.test_rmse))

    @property
    def std(self) -> float:
        return float(np.std(self.test_rmse, ddof=1)) if len(self.test_rmse) > 1 else 0.0

    def summary(self) -> Dict[str, object]:
        return {'repeats': len(self.test_rmse), 'test_rmse': self.test_rmse,
                'mean': self.mean, 'std': self.std}


def repeated_split_evaluation(data: Dataset, config: TrainConfig, repeats: int,
                              sizes: Sequence[SplitSize], seed: int) -> RepeatedSplitResult:
    """Train on `repeats` independent random splits and collect held-out RMSE."""
    if repeats < 1:
        raise InvalidArgumentError('repeats', repeats, "must be >= 1")
    result = RepeatedSplitResult(test_rmse=[])
    for repeat in range(repeats):
        train_part, val_part, test_part = split_dataset(data, sizes, [seed, repeat])
        if len(test_part) == 0:
            raise EmptyDatasetError('test split')
        net, report = train(train_part, val_part, replace(config, seed=config.seed + repeat))
        rmse = math.sqrt(mse_loss(net, test_part, threads=config.threads))
        logger.info("Repeat %d: test RMSE %.6g", repeat, rmse)
        result.test_rmse.append(rmse)
        result.reports.append(report)
    return result
