"""
Adam optimizer and the validation-driven learning-rate schedule.

Both are small explicit state machines: every update returns a new state
object, so a run can be replayed or inspected step by step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .exceptions import DimensionMismatchError, InvalidArgumentError
from .gradients import ParamGradients
from .model import RbfNetwork

# Relative slack for the floor comparison; lr values are lr0 * 0.1**j and
# float products can land a hair below the nominal floor.
_FLOOR_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class AdamState:
    """Moment estimates and hyperparameters of one Adam run."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidArgumentError('lr', self.lr, "must be > 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise InvalidArgumentError('betas', (self.beta1, self.beta2), "must lie in [0, 1)")
        if not self.epsilon > 0:
            raise InvalidArgumentError('epsilon', self.epsilon, "must be > 0")
        if self.first_moment.shape != self.second_moment.shape:
            raise DimensionMismatchError('Adam moments', self.first_moment.size, self.second_moment.size)

    @classmethod
    def fresh(cls, size: int, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0, lr, beta1, beta2, epsilon)

    @classmethod
    def for_network(cls, net: RbfNetwork, lr: float) -> "AdamState":
        return cls.fresh(net.to_vector().size, lr=lr)

    def with_lr(self, lr: float) -> "AdamState":
        return replace(self, lr=lr)


def adam_update(params: np.ndarray, grads: np.ndarray, state: AdamState) -> Tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step on a flat parameter vector."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != state.first_moment.shape or grads.shape != params.shape:
        raise DimensionMismatchError('Adam parameters', state.first_moment.size, params.size)

    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    updated = params - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return updated, replace(state, first_moment=m, second_moment=v, step_count=t)


def adam_step(net: RbfNetwork, grads: ParamGradients, state: AdamState) -> Tuple[RbfNetwork, AdamState]:
    """Adam step on every network parameter."""
    vector, new_state = adam_update(net.to_vector(), grads.to_vector(), state)
    return RbfNetwork.from_vector(vector, net.num_centroids, net.dim), new_state


class Decision(str, Enum):
    """Outcome of one schedule update."""

    CONTINUE = "continue"
    REDUCE = "reduce"
    STOP = "stop"


class StopReason(str, Enum):
    """Why a training or pruning run ended."""

    LR_FLOOR = "lr_floor"
    MAX_EPOCHS = "max_epochs"
    MAX_ITERATIONS = "max_iterations"
    NON_FINITE = "non_finite"


@dataclass(frozen=True)
class ScheduleState:
    """
    Patience-driven learning-rate decay with early-stopping snapshot.

    The learning rate is lr_start * decay_factor**reductions; best_params is
    the parameter set that produced best_metric.
    """

    lr_start: float
    floor_lr: float
    patience: int = 10
    grace: int = 10
    decay_factor: float = 0.1
    best_metric: float = math.inf
    epochs_since_improvement: int = 0
    grace_remaining: int = 0
    reductions: int = 0
    non_finite_count: int = 0
    best_params: Optional[RbfNetwork] = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.lr_start > 0 and self.floor_lr > 0):
            raise InvalidArgumentError('lr_start/floor_lr', (self.lr_start, self.floor_lr), "must be > 0")
        if self.lr_start < self.floor_lr:
            raise InvalidArgumentError('lr_start', self.lr_start, "must be >= floor_lr")
        if self.patience < 1 or self.grace < 0:
            raise InvalidArgumentError('patience/grace', (self.patience, self.grace), "need patience >= 1, grace >= 0")
        if not 0 < self.decay_factor < 1:
            raise InvalidArgumentError('decay_factor', self.decay_factor, "must lie in (0, 1)")

    @property
    def current_lr(self) -> float:
        return self.lr_start * self.decay_factor ** self.reductions


def schedule_update(state: ScheduleState, epoch_metric: float,
                    current_params: Optional[RbfNetwork] = None) -> Tuple[Decision, ScheduleState]:
    """
    Feed one epoch (or iteration) metric into the schedule.

    Improvement is strict. Grace epochs after a reduction suspend the
    no-improvement counter but improvements are still recorded. A NaN metric
    counts as no improvement.
    """
    metric = float(epoch_metric)
    if math.isnan(metric):
        state = replace(state, non_finite_count=state.non_finite_count + 1)

    if metric < state.best_metric:
        return Decision.CONTINUE, replace(state, best_metric=metric, best_params=current_params,
                                          epochs_since_improvement=0)

    if state.grace_remaining > 0:
        return Decision.CONTINUE, replace(state, grace_remaining=state.grace_remaining - 1)

    counter = state.epochs_since_improvement + 1
    if counter < state.patience:
        return Decision.CONTINUE, replace(state, epochs_since_improvement=counter)

    next_lr = state.lr_start * state.decay_factor ** (state.reductions + 1)
    if next_lr < state.floor_lr * (1.0 - _FLOOR_SLACK):
        return Decision.STOP, replace(state, epochs_since_improvement=counter)

    return Decision.REDUCE, replace(state, reductions=state.reductions + 1,
                                    epochs_since_improvement=0, grace_remaining=state.grace)
