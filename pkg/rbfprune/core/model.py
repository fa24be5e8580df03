"""
RBF network parameterization, prediction and mean squared error.

A network is f(x) = alpha + sum_i beta_i * exp(-gamma * ||x - theta_i||^2)
with gamma stored as log_gamma so it stays positive.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidArgumentError,
    NonFiniteValueError,
)

logger = logging.getLogger(__name__)

# Rows per chunk are chosen so a chunk's (rows, K, D) difference tensor stays
# around this many elements.
_CHUNK_ELEMENTS = 1 << 22


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise InvalidArgumentError(name, arr.shape, f"expected a {ndim}-d array")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RbfNetwork:
    """Immutable parameter set of one Gaussian RBF network."""

    log_gamma: float
    alpha: float
    beta: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        beta = _frozen_array(self.beta, 1, 'beta')
        theta = _frozen_array(self.theta, 2, 'theta')
        if beta.shape[0] < 1 or theta.shape[1] < 1:
            raise InvalidArgumentError('theta', theta.shape, "need K >= 1 and D >= 1")
        if beta.shape[0] != theta.shape[0]:
            raise DimensionMismatchError('beta length vs theta rows', theta.shape[0], beta.shape[0])
        object.__setattr__(self, 'beta', beta)
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'log_gamma', float(self.log_gamma))
        object.__setattr__(self, 'alpha', float(self.alpha))
        if not (np.isfinite(self.log_gamma) and np.isfinite(self.alpha)
                and np.all(np.isfinite(beta)) and np.all(np.isfinite(theta))):
            raise NonFiniteValueError('network parameters')

    @property
    def gamma(self) -> float:
        return float(np.exp(self.log_gamma))

    @property
    def num_centroids(self) -> int:
        return int(self.theta.shape[0])

    @property
    def dim(self) -> int:
        return int(self.theta.shape[1])

    def replace(self, **changes) -> "RbfNetwork":
        values = {'log_gamma': self.log_gamma, 'alpha': self.alpha,
                  'beta': self.beta, 'theta': self.theta}
        values.update(changes)
        return RbfNetwork(**values)

    def to_vector(self) -> np.ndarray:
        """Flatten parameters as [log_gamma, alpha, beta..., theta (row-major)...]."""
        return np.concatenate(([self.log_gamma, self.alpha], self.beta, self.theta.ravel()))

    @classmethod
    def from_vector(cls, vector: np.ndarray, num_centroids: int, dim: int) -> "RbfNetwork":
        vector = np.asarray(vector, dtype=np.float64)
        expected = 2 + num_centroids + num_centroids * dim
        if vector.shape != (expected,):
            raise DimensionMismatchError('parameter vector', expected, int(vector.size))
        return cls(
            log_gamma=vector[0],
            alpha=vector[1],
            beta=vector[2:2 + num_centroids],
            theta=vector[2 + num_centroids:].reshape(num_centroids, dim),
        )

    def equals(self, other: "RbfNetwork") -> bool:
        """Bit-exact parameter equality."""
        return (self.log_gamma == other.log_gamma and self.alpha == other.alpha
                and np.array_equal(self.beta, other.beta)
                and np.array_equal(self.theta, other.theta))


@dataclass(frozen=True, eq=False)
class Dataset:
    """N input rows of D features with N real responses."""

    inputs: np.ndarray
    responses: np.ndarray
    feature_names: Optional[tuple] = field(default=None)

    def __post_init__(self):
        inputs = _frozen_array(self.inputs, 2, 'inputs')
        responses = _frozen_array(self.responses, 1, 'responses')
        if inputs.shape[0] != responses.shape[0]:
            raise DimensionMismatchError('responses length vs input rows', inputs.shape[0], responses.shape[0])
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(responses))):
            raise NonFiniteValueError('dataset entries')
        object.__setattr__(self, 'inputs', inputs)
        object.__setattr__(self, 'responses', responses)

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def dim(self) -> int:
        return int(self.inputs.shape[1])

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(self.inputs[indices], self.responses[indices], self.feature_names)


def squared_distances(inputs: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, K) matrix of sum_d (x_d - theta_d)^2, computed without the norm expansion."""
    diff = inputs[:, None, :] - centroids[None, :, :]
    return np.sum(diff * diff, axis=2)


def kernel_matrix(net: RbfNetwork, inputs: np.ndarray) -> np.ndarray:
    return np.exp(-net.gamma * squared_distances(inputs, net.theta))


def _forward_rows(net: RbfNetwork, inputs: np.ndarray) -> np.ndarray:
    phi = kernel_matrix(net, inputs)
    # Row-wise reduction over the contiguous axis gives each row the same
    # result no matter how many rows share the call.
    return net.alpha + np.sum(phi * net.beta, axis=1)


def _check_dim(net: RbfNetwork, found: int, what: str) -> None:
    if found != net.dim:
        raise DimensionMismatchError(what, net.dim, found)


def forward(net: RbfNetwork, x) -> float:
    """Evaluate the network at one input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgumentError('x', x.shape, "expected a vector")
    _check_dim(net, x.shape[0], 'input vector')
    return float(_forward_rows(net, x[None, :])[0])


def forward_batch(net: RbfNetwork, inputs, threads: int = 1) -> np.ndarray:
    """
    Evaluate the network on every row of an (n, D) matrix.

    Args:
        net: Network to evaluate
        inputs: Input matrix with D columns; zero rows give an empty result
        threads: Worker threads for row chunks; 1 is the deterministic default

    Returns:
        Vector of n predictions
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2:
        raise InvalidArgumentError('inputs', inputs.shape, "expected a matrix")
    _check_dim(net, inputs.shape[1], 'input columns')
    n = inputs.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.float64)

    chunk = max(1, _CHUNK_ELEMENTS // (net.num_centroids * net.dim))
    bounds = [(start, min(start + chunk, n)) for start in range(0, n, chunk)]
    if threads <= 1 or len(bounds) == 1:
        return np.concatenate([_forward_rows(net, inputs[lo:hi]) for lo, hi in bounds])

    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda b: _forward_rows(net, inputs[b[0]:b[1]]), bounds))
    return np.concatenate(parts)


def mse_loss(net: RbfNetwork, data: Dataset, threads: int = 1) -> float:
    """Mean squared error of the network on a dataset."""
    if len(data) == 0:
        raise EmptyDatasetError('dataset for mse_loss')
    _check_dim(net, data.dim, 'dataset columns')
    residuals = forward_batch(net, data.inputs, threads=threads) - data.responses
    return float(np.mean(residuals * residuals))
