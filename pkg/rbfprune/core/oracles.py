"""
Reference computations for the closed-form expectations and gradients.

Everything here is evaluated the slow, literal way (enumeration over all
+1/-1 outcomes, adaptive 1-D quadrature per dimension, Monte Carlo sampling,
central finite differences) and shares no code with the closed forms in
rbfprune.core.pruning beyond network evaluation.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, Iterator, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .distributions import Bernoulli, GaussianMixture, InputDistribution, UniformBox
from .exceptions import (
    DimensionMismatchError,
    EnumerationLimitError,
    InvalidArgumentError,
    InvalidDistributionError,
    QuadratureError,
)
from .gradients import ParamGradients
from .model import RbfNetwork, forward_batch

logger = logging.getLogger(__name__)

MAX_ENUMERATION_DIM = 20
MIN_MC_SAMPLES = 100
TAIL_SIGMAS = 12.0
_ENUM_CHUNK = 1 << 16
_MC_CHUNK = 1 << 16
_QUAD_LIMIT = 200


def _as_pair(u, v, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != (dim,):
        raise DimensionMismatchError('u dimension', dim, u.size)
    if v.shape != (dim,):
        raise DimensionMismatchError('v dimension', dim, v.size)
    return u, v


def _check_scales(k: float, r: float) -> None:
    if not (k >= 0 and r >= 0):
        raise InvalidArgumentError('k, r', (k, r), "must be >= 0")


def _outcomes(dim: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """All x in {-1, +1}^dim in plain binary order, in chunks of rows."""
    if dim > MAX_ENUMERATION_DIM:
        raise EnumerationLimitError(dim, MAX_ENUMERATION_DIM)
    bits = np.arange(dim)
    total = 1 << dim
    for lo in range(0, total, _ENUM_CHUNK):
        codes = np.arange(lo, min(lo + _ENUM_CHUNK, total))
        ones = ((codes[:, None] >> bits) & 1).astype(bool)
        yield ones, np.where(ones, 1.0, -1.0)


def _log_outcome_probability(ones: np.ndarray, q: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore'):
        log_q = np.log(q)
        log_not_q = np.log(1.0 - q)
    return np.sum(np.where(ones, log_q, log_not_q), axis=1)


def bernoulli_log_expectation_exhaustive(k: float, r: float, u, v, dist: Bernoulli) -> float:
    """Log of the 2^D-term sum; each outcome's exponent is computed directly."""
    _check_scales(k, r)
    u, v = _as_pair(u, v, dist.dim)
    parts = []
    for ones, x in _outcomes(dist.dim):
        exponent = -k * np.sum((x - u) ** 2, axis=1) - r * np.sum((x - v) ** 2, axis=1)
        parts.append(logsumexp(_log_outcome_probability(ones, dist.q) + exponent))
    return float(logsumexp(parts))


def bernoulli_expectation_exhaustive(k: float, r: float, u, v, dist: Bernoulli) -> float:
    """
    E[exp(-k||x-u||^2 - r||x-v||^2)] by summing over every +1/-1 outcome.

    Raises:
        EnumerationLimitError: D > 20
    """
    if not isinstance(dist, Bernoulli):
        raise InvalidDistributionError(type(dist).__name__, "exhaustive enumeration needs a Bernoulli distribution")
    return math.exp(bernoulli_log_expectation_exhaustive(k, r, u, v, dist))


def _integrate_1d(fn: Callable[[float], float], lo: float, hi: float, peak: float,
                  abs_tol: float, rel_tol: float, dim: int) -> float:
    points = [peak] if lo < peak < hi else None
    result = integrate.quad(fn, lo, hi, points=points, epsabs=abs_tol, epsrel=rel_tol,
                            limit=_QUAD_LIMIT, full_output=1)
    value, error = result[0], result[1]
    # A fourth element is quad's warning message.
    if len(result) > 3 and error > max(abs_tol, rel_tol * abs(value)):
        raise QuadratureError(error, max(abs_tol, rel_tol * abs(value)), dim)
    return value


def log_expectation_quadrature(k: float, r: float, u, v, dist: Union[GaussianMixture, UniformBox],
                               abs_tol: float = 0.0, rel_tol: float = 1e-10) -> float:
    """Log of the expectation as a sum of per-dimension log integrals."""
    _check_scales(k, r)
    u, v = _as_pair(u, v, dist.dim)
    c = k + r

    total = 0.0
    for d in range(dist.dim):
        ud, vd = float(u[d]), float(v[d])
        peak = (k * ud + r * vd) / c if c > 0 else 0.0
        if isinstance(dist, UniformBox):
            lo, hi = float(dist.low[d]), float(dist.high[d])
            width = hi - lo
            # Shift by the largest exponent on the box so narrow, far-off kernels do not underflow.
            edge = min(max(peak, lo), hi)
            box_shift = -k * (edge - ud) ** 2 - r * (edge - vd) ** 2

            def boxed(x: float) -> float:
                return math.exp(-k * (x - ud) ** 2 - r * (x - vd) ** 2 - box_shift) / width

            total += box_shift + math.log(_integrate_1d(boxed, lo, hi, peak, abs_tol, rel_tol, d))
        elif isinstance(dist, GaussianMixture):
            log_parts = []
            for weight, mean, var in dist.components(d):
                # Density times kernel peaks at top, which always lies inside [lo, hi].
                precision = 0.5 / var
                top = (precision * mean + k * ud + r * vd) / (precision + k + r)
                spread = TAIL_SIGMAS * math.sqrt(var)
                lo, hi = min(mean, top) - spread, max(mean, top) + spread
                comp_shift = -precision * (top - mean) ** 2 - k * (top - ud) ** 2 - r * (top - vd) ** 2

                def integrand(x: float, mean=mean, precision=precision, comp_shift=comp_shift) -> float:
                    return math.exp(-precision * (x - mean) ** 2 - k * (x - ud) ** 2 - r * (x - vd) ** 2
                                    - comp_shift)

                part = _integrate_1d(integrand, lo, hi, top, abs_tol, rel_tol, d)
                log_parts.append(math.log(weight) - 0.5 * math.log(2.0 * math.pi * var)
                                 + comp_shift + math.log(part))
            total += float(logsumexp(log_parts))
        else:
            raise InvalidDistributionError(type(dist).__name__, "quadrature needs a continuous distribution")
    return total


def expectation_quadrature(k: float, r: float, u, v, dist: Union[GaussianMixture, UniformBox],
                           abs_tol: float = 0.0, rel_tol: float = 1e-10) -> float:
    """
    Expectation by adaptive quadrature, one 1-D integral per dimension.

    Mixture components are integrated over mean +/- 12 standard deviations,
    widened to cover the peak of density times kernel when that lies further out.

    Raises:
        QuadratureError: an integral missed its tolerance
    """
    return math.exp(log_expectation_quadrature(k, r, u, v, dist, abs_tol, rel_tol))


def pruning_objective_exhaustive(large: RbfNetwork, small: RbfNetwork, dist: Bernoulli) -> float:
    """Probability-weighted mean of (f_large(x) - f_small(x))^2 over all outcomes."""
    if not isinstance(dist, Bernoulli):
        raise InvalidDistributionError(type(dist).__name__, "exhaustive enumeration needs a Bernoulli distribution")
    if small.dim != large.dim:
        raise DimensionMismatchError('small network dimension', large.dim, small.dim)
    dist.check_dim(large.dim)
    total = 0.0
    for ones, x in _outcomes(dist.dim):
        gap = forward_batch(large, x) - forward_batch(small, x)
        total += float(np.exp(_log_outcome_probability(ones, dist.q)) @ (gap * gap))
    return total


def _mean_and_stderr(values: np.ndarray) -> Tuple[float, float]:
    mean = float(np.mean(values))
    spread = values - mean
    var = float(np.dot(spread, spread)) / (values.size - 1)
    return mean, math.sqrt(var / values.size)


def _draw(dist: InputDistribution, samples: int, seed) -> Iterator[np.ndarray]:
    if samples < MIN_MC_SAMPLES:
        raise InvalidArgumentError('samples', samples, f"must be >= {MIN_MC_SAMPLES}")
    rng = np.random.default_rng(seed)
    for lo in range(0, samples, _MC_CHUNK):
        yield dist.sample(min(_MC_CHUNK, samples - lo), rng)


def mc_expectation(k: float, r: float, u, v, dist: InputDistribution,
                   samples: int, seed) -> Tuple[float, float]:
    """Monte Carlo estimate of the expectation and its standard error."""
    _check_scales(k, r)
    u, v = _as_pair(u, v, dist.dim)
    values = np.concatenate([
        np.exp(-k * np.sum((x - u) ** 2, axis=1) - r * np.sum((x - v) ** 2, axis=1))
        for x in _draw(dist, samples, seed)
    ])
    return _mean_and_stderr(values)


def mc_pruning_objective(large: RbfNetwork, small: RbfNetwork, dist: InputDistribution,
                         samples: int, seed) -> Tuple[float, float]:
    """Monte Carlo estimate of E[(f_large - f_small)^2] and its standard error."""
    if small.dim != large.dim:
        raise DimensionMismatchError('small network dimension', large.dim, small.dim)
    dist.check_dim(large.dim)
    values = np.concatenate([
        (forward_batch(large, x) - forward_batch(small, x)) ** 2
        for x in _draw(dist, samples, seed)
    ])
    return _mean_and_stderr(values)


def finite_difference_gradients(fn: Callable[[RbfNetwork], float], net: RbfNetwork,
                                step: float = 1e-6) -> ParamGradients:
    """Central-difference gradient of a scalar function of a network."""
    if not step > 0:
        raise InvalidArgumentError('step', step, "must be > 0")
    base = net.to_vector()
    grad = np.empty_like(base)
    for i in range(base.size):
        shifted = base.copy()
        shifted[i] = base[i] + step
        upper = fn(RbfNetwork.from_vector(shifted, net.num_centroids, net.dim))
        shifted[i] = base[i] - step
        lower = fn(RbfNetwork.from_vector(shifted, net.num_centroids, net.dim))
        grad[i] = (upper - lower) / (2.0 * step)
    return ParamGradients.from_vector(grad, net.num_centroids, net.dim)
