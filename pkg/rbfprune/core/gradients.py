"""
Closed-form gradients of the regularized minibatch MSE.

loss = mean((f(x) - y)^2) + weight_decay * (log_gamma^2 + alpha^2 + ||beta||^2 + ||theta||_F^2)

The kernel values exp(-gamma * r^2) are computed once per (point, centroid)
pair and shared by the loss and every gradient term.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import DimensionMismatchError, EmptyDatasetError, InvalidArgumentError
from .model import Dataset, RbfNetwork, _CHUNK_ELEMENTS


@dataclass
class ParamGradients:
    """Gradient with the same shapes as an RbfNetwork."""

    d_log_gamma: float
    d_alpha: float
    d_beta: np.ndarray
    d_theta: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.d_log_gamma, self.d_alpha], self.d_beta, self.d_theta.ravel()))

    @classmethod
    def from_vector(cls, vector: np.ndarray, num_centroids: int, dim: int) -> "ParamGradients":
        vector = np.asarray(vector, dtype=np.float64)
        return cls(
            d_log_gamma=float(vector[0]),
            d_alpha=float(vector[1]),
            d_beta=vector[2:2 + num_centroids].copy(),
            d_theta=vector[2 + num_centroids:].reshape(num_centroids, dim).copy(),
        )

    @classmethod
    def zeros_like(cls, net: RbfNetwork) -> "ParamGradients":
        return cls(0.0, 0.0, np.zeros_like(net.beta), np.zeros_like(net.theta))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))


def weight_decay_penalty(net: RbfNetwork, weight_decay: float) -> Tuple[float, ParamGradients]:
    """L2 penalty over all parameters (gamma through log_gamma) and its gradient."""
    penalty = weight_decay * (net.log_gamma ** 2 + net.alpha ** 2
                              + float(np.dot(net.beta, net.beta))
                              + float(np.sum(net.theta * net.theta)))
    grads = ParamGradients(
        d_log_gamma=2.0 * weight_decay * net.log_gamma,
        d_alpha=2.0 * weight_decay * net.alpha,
        d_beta=2.0 * weight_decay * net.beta,
        d_theta=2.0 * weight_decay * net.theta,
    )
    return penalty, grads


def loss_gradients(net: RbfNetwork, batch: Dataset, weight_decay: float = 0.0) -> Tuple[float, ParamGradients]:
    """
    Regularized batch MSE and its exact gradient.

    Args:
        net: Current network
        batch: Minibatch (at least one row)
        weight_decay: L2 coefficient, >= 0

    Returns:
        (loss, gradients)
    """
    if len(batch) == 0:
        raise EmptyDatasetError('batch')
    if batch.dim != net.dim:
        raise DimensionMismatchError('batch columns', net.dim, batch.dim)
    if weight_decay < 0:
        raise InvalidArgumentError('weight_decay', weight_decay, "must be >= 0")

    gamma = net.gamma
    n = len(batch)
    chunk = max(1, _CHUNK_ELEMENTS // (net.num_centroids * net.dim))

    sq_error = 0.0
    g_alpha = 0.0
    g_log_gamma = 0.0
    g_beta = np.zeros_like(net.beta)
    g_theta_core = np.zeros_like(net.theta)

    # Sequential accumulation over fixed chunks keeps the sums reproducible.
    for lo in range(0, n, chunk):
        x = batch.inputs[lo:lo + chunk]
        y = batch.responses[lo:lo + chunk]
        diff = x[:, None, :] - net.theta[None, :, :]
        sq = np.sum(diff * diff, axis=2)
        phi = np.exp(-gamma * sq)
        residual = net.alpha + np.sum(phi * net.beta, axis=1) - y
        sq_error += float(np.dot(residual, residual))

        coef = (2.0 / n) * residual
        g_alpha += float(np.sum(coef))
        g_beta += coef @ phi
        weighted = coef[:, None] * phi
        g_theta_core += np.einsum('nk,nkd->kd', weighted, diff)
        g_log_gamma += float(np.sum(weighted * sq, axis=0) @ net.beta)

    penalty, decay = weight_decay_penalty(net, weight_decay)
    loss = sq_error / n + penalty
    grads = ParamGradients(
        d_log_gamma=-gamma * g_log_gamma + decay.d_log_gamma,
        d_alpha=g_alpha + decay.d_alpha,
        d_beta=g_beta + decay.d_beta,
        d_theta=2.0 * gamma * net.beta[:, None] * g_theta_core + decay.d_theta,
    )
    return loss, grads
