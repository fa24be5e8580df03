"""
Pruning a large RBF network into a small one.

The objective is E_p[(f_K(x) - f_M(x))^2] under an input distribution p.
Expanding the square reduces it to kernel expectations

    E(k, r, u, v) = E_p[exp(-k ||x - u||^2 - r ||x - v||^2)]

which have closed forms for Gaussian mixtures, uniform boxes and +1/-1
Bernoulli inputs. All three are evaluated in the log domain as a sum of
per-dimension log factors, together with the partial derivatives of the log
with respect to u, v, k and r that the pruning gradient needs.

Large-network terms (the K x K expectation contraction and the K single
expectations) do not depend on the small network and are computed once per
(large network, distribution) pair.
"""
from __future__ import annotations

import logging
import math
import threading
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import erf, log_ndtr, logsumexp

from .distributions import Bernoulli, GaussianMixture, InputDistribution, UniformBox
from .exceptions import (
    DimensionMismatchError,
    InvalidArgumentError,
    InvalidDistributionError,
    NonFiniteValueError,
)
from .gradients import ParamGradients
from .model import RbfNetwork
from .optimizer import AdamState, Decision, ScheduleState, StopReason, adam_step, schedule_update

logger = logging.getLogger(__name__)

# Objective values in [-NEGATIVE_TOLERANCE, 0) are cancellation noise and clamp to 0.
NEGATIVE_TOLERANCE = 1e-9
# Below this k + r the uniform closed form is replaced by its k = r = 0 limit.
_UNIFORM_SMALL_SCALE = 1e-12
_LOG_TWO_OVER_SQRT_PI = math.log(2.0 / math.sqrt(math.pi))
_LN2 = math.log(2.0)
_CHUNK_ELEMENTS = 1 << 16


@dataclass
class KernelTerms:
    """
    log E(k, r, U_i, V_j) for all row pairs plus its partial derivatives.

    log_value: (n1, n2); d_u, d_v: (n1, n2, D); d_k, d_r: (n1, n2).
    Derivative fields are None unless gradients were requested.
    """

    log_value: np.ndarray
    d_u: Optional[np.ndarray] = None
    d_v: Optional[np.ndarray] = None
    d_k: Optional[np.ndarray] = None
    d_r: Optional[np.ndarray] = None

    @property
    def value(self) -> np.ndarray:
        return np.exp(self.log_value)


def _log1mexp(x: np.ndarray) -> np.ndarray:
    """log(1 - exp(x)) for x <= 0."""
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(x > -_LN2, np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def _log_erfc(x: np.ndarray) -> np.ndarray:
    return _LN2 + log_ndtr(-x * math.sqrt(2.0))


def _log_erf_diff(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """log(erf(upper) - erf(lower)) for upper > lower without cancellation in the tails."""
    with np.errstate(divide='ignore', invalid='ignore'):
        right_tail = _log_erfc(lower) + _log1mexp(_log_erfc(upper) - _log_erfc(lower))
        left_tail = _log_erfc(-upper) + _log1mexp(_log_erfc(-lower) - _log_erfc(-upper))
        straddle = np.log(erf(upper) - erf(lower))
    return np.where(lower >= 0, right_tail, np.where(upper <= 0, left_tail, straddle))


def _bernoulli_terms(k: float, r: float, u: np.ndarray, v: np.ndarray,
                     dist: Bernoulli, with_grad: bool) -> KernelTerms:
    q = dist.q
    with np.errstate(divide='ignore'):
        log_q = np.log(q)
        log_not_q = np.log1p(-q)
    u_plus = u + 1.0
    v_plus = v + 1.0
    t = 4.0 * (k * u + r * v)
    log_mix = np.logaddexp(log_not_q, log_q + t)
    log_value = np.sum(-k * u_plus ** 2 - r * v_plus ** 2 + log_mix, axis=-1)
    if not with_grad:
        return KernelTerms(log_value)

    # Posterior probability of the +1 outcome given the tilt t.
    p_plus = np.exp(log_q + t - log_mix)
    return KernelTerms(
        log_value=log_value,
        d_u=k * (4.0 * p_plus - 2.0 * u_plus),
        d_v=r * (4.0 * p_plus - 2.0 * v_plus),
        d_k=np.sum(4.0 * u * p_plus - u_plus ** 2, axis=-1),
        d_r=np.sum(4.0 * v * p_plus - v_plus ** 2, axis=-1),
    )


def _gaussian_terms(k: float, r: float, u: np.ndarray, v: np.ndarray,
                    dist: GaussianMixture, with_grad: bool) -> KernelTerms:
    u = u[..., None]
    v = v[..., None]
    mu = dist.means
    var = dist.variances
    with np.errstate(divide='ignore'):
        log_w = np.log(dist.weights)

    scale = 1.0 + 2.0 * var * (k + r)
    du = u - mu
    dv = v - mu
    duv = u - v
    quad = k * du ** 2 + r * dv ** 2 + 2.0 * var * k * r * duv ** 2
    log_comp = log_w - 0.5 * np.log(scale) - quad / scale
    if log_comp.shape[-1] == 1:
        log_factor = log_comp[..., 0]
    else:
        log_factor = logsumexp(log_comp, axis=-1)
    log_value = np.sum(log_factor, axis=-1)
    if not with_grad:
        return KernelTerms(log_value)

    resp = np.exp(log_comp - log_factor[..., None])
    cross = 4.0 * var * k * r * duv
    d_u = -(2.0 * k * du + cross) / scale
    d_v = -(2.0 * r * dv - cross) / scale
    d_k = -var / scale - ((du ** 2 + 2.0 * var * r * duv ** 2) * scale - 2.0 * var * quad) / scale ** 2
    d_r = -var / scale - ((dv ** 2 + 2.0 * var * k * duv ** 2) * scale - 2.0 * var * quad) / scale ** 2
    return KernelTerms(
        log_value=log_value,
        d_u=np.sum(resp * d_u, axis=-1),
        d_v=np.sum(resp * d_v, axis=-1),
        d_k=np.sum(resp * d_k, axis=(-2, -1)),
        d_r=np.sum(resp * d_r, axis=(-2, -1)),
    )


def _uniform_terms(k: float, r: float, u: np.ndarray, v: np.ndarray,
                   dist: UniformBox, with_grad: bool) -> KernelTerms:
    low, high = dist.low, dist.high
    shape = np.broadcast_shapes(u.shape, v.shape)
    c = k + r
    if c < _UNIFORM_SMALL_SCALE:
        # Limit of the closed form at k = r = 0; first-order terms give the slopes.
        log_value = np.zeros(shape[:-1])
        if not with_grad:
            return KernelTerms(log_value)
        mid = 0.5 * (low + high)
        spread = (high - low) ** 2 / 12.0
        zeros = np.zeros(shape)
        return KernelTerms(
            log_value=log_value,
            d_u=zeros, d_v=zeros.copy(),
            d_k=np.broadcast_to(np.sum(-(spread + (mid - u) ** 2), axis=-1), shape[:-1]).copy(),
            d_r=np.broadcast_to(np.sum(-(spread + (mid - v) ** 2), axis=-1), shape[:-1]).copy(),
        )

    root = math.sqrt(c)
    duv = u - v
    centre = k * u + r * v
    upper = (c * high - centre) / root
    lower = (c * low - centre) / root
    log_diff = _log_erf_diff(lower, upper)
    log_factor = (0.5 * math.log(math.pi / (4.0 * c)) - np.log(high - low)
                  - k * r * duv ** 2 / c + log_diff)
    log_value = np.sum(log_factor, axis=-1)
    if not with_grad:
        return KernelTerms(log_value)

    with np.errstate(over='ignore', invalid='ignore'):
        slope_hi = np.exp(_LOG_TWO_OVER_SQRT_PI - upper ** 2 - log_diff)
        slope_lo = np.exp(_LOG_TWO_OVER_SQRT_PI - lower ** 2 - log_diff)
    edge = slope_hi - slope_lo
    return KernelTerms(
        log_value=log_value,
        d_u=-2.0 * k * r * duv / c - edge * k / root,
        d_v=2.0 * k * r * duv / c - edge * r / root,
        d_k=np.sum(-0.5 / c - r ** 2 * duv ** 2 / c ** 2
                   + slope_hi * ((high - u) / root - upper / (2.0 * c))
                   - slope_lo * ((low - u) / root - lower / (2.0 * c)), axis=-1),
        d_r=np.sum(-0.5 / c - k ** 2 * duv ** 2 / c ** 2
                   + slope_hi * ((high - v) / root - upper / (2.0 * c))
                   - slope_lo * ((low - v) / root - lower / (2.0 * c)), axis=-1),
    )


_FAMILIES = {
    GaussianMixture: _gaussian_terms,
    UniformBox: _uniform_terms,
    Bernoulli: _bernoulli_terms,
}


def _validate_scales(k: float, r: float) -> None:
    if not (k >= 0 and r >= 0 and math.isfinite(k) and math.isfinite(r)):
        raise InvalidArgumentError('k, r', (k, r), "must be finite and >= 0")


def kernel_terms(k: float, r: float, U: np.ndarray, V: np.ndarray,
                 dist: InputDistribution, with_grad: bool = False) -> KernelTerms:
    """
    Log expectations and derivatives for every pair (U_i, V_j).

    Args:
        k, r: Kernel sharpness of the u and v kernels, both >= 0
        U: (n1, D) centres of the k kernel
        V: (n2, D) centres of the r kernel
        dist: Input distribution with D dimensions
        with_grad: Also return the log-derivatives

    Returns:
        KernelTerms with (n1, n2) log values
    """
    _validate_scales(k, r)
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    if U.shape[1] != dist.dim:
        raise DimensionMismatchError('u dimension', dist.dim, U.shape[1])
    if V.shape[1] != dist.dim:
        raise DimensionMismatchError('v dimension', dist.dim, V.shape[1])
    family = _FAMILIES.get(type(dist))
    if family is None:
        raise InvalidDistributionError(type(dist).__name__, "unsupported distribution family")
    return family(float(k), float(r), U[:, None, :], V[None, :, :], dist, with_grad)


def expectation_matrix(k: float, r: float, U, V, dist: InputDistribution) -> np.ndarray:
    """(n1, n2) matrix of E(k, r, U_i, V_j)."""
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    if k == 0 and r == 0:
        _validate_scales(k, r)
        return np.ones((U.shape[0], V.shape[0]))
    return kernel_terms(k, r, U, V, dist).value


def _single(k, r, u, v, dist, family) -> float:
    if not isinstance(dist, family):
        raise InvalidDistributionError(type(dist).__name__, f"expected {family.__name__}")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatchError('u and v length', u.size, v.size)
    return float(expectation_matrix(k, r, u[None, :], v[None, :], dist)[0, 0])


def expectation_gaussian_mixture(k: float, r: float, u, v, dist: GaussianMixture) -> float:
    """E[exp(-k||x-u||^2 - r||x-v||^2)] for per-dimension Gaussian mixtures."""
    return _single(k, r, u, v, dist, GaussianMixture)


def expectation_uniform(k: float, r: float, u, v, dist: UniformBox) -> float:
    """Same expectation for a uniform box; exactly 1 at k = r = 0."""
    return _single(k, r, u, v, dist, UniformBox)


def expectation_bernoulli(k: float, r: float, u, v, dist: Bernoulli) -> float:
    """Same expectation for independent +1/-1 inputs, O(D) in the log domain."""
    return _single(k, r, u, v, dist, Bernoulli)


def expectation(k: float, r: float, u, v, dist: InputDistribution) -> float:
    """Dispatch on the distribution family."""
    return _single(k, r, u, v, dist, type(dist))


def _row_chunks(n_rows: int, n_cols: int, dim: int, width: int = 1):
    step = max(1, _CHUNK_ELEMENTS // max(1, n_cols * dim * width))
    for lo in range(0, n_rows, step):
        yield lo, min(lo + step, n_rows)


def _width(dist: InputDistribution) -> int:
    return dist.weights.shape[1] if isinstance(dist, GaussianMixture) else 1


@dataclass(frozen=True)
class LargeNetworkConstants:
    """Objective terms that depend only on the large network and the distribution."""

    contraction: float
    singles: np.ndarray
    mean_term: float


def large_network_constants(large: RbfNetwork, dist: InputDistribution) -> LargeNetworkConstants:
    """b^T E(k, k) b, the K single expectations E(k, 0, Z_i, 0) and b . singles."""
    dist.check_dim(large.dim)
    k = large.gamma
    b = large.beta
    Z = large.theta
    contraction = 0.0
    for lo, hi in _row_chunks(large.num_centroids, large.num_centroids, large.dim, _width(dist)):
        block = kernel_terms(k, k, Z[lo:hi], Z, dist).value
        contraction += float(b[lo:hi] @ block @ b)
    singles = kernel_terms(k, 0.0, Z, np.zeros((1, large.dim)), dist).value[:, 0]
    return LargeNetworkConstants(contraction, singles, float(b @ singles))


@dataclass
class _BlockSums:
    """Running sums of one kernel block, accumulated over row chunks."""

    quadratic: float
    weighted: np.ndarray
    d_theta: np.ndarray
    d_gamma: float = 0.0


class PruningObjective:
    """
    Pruning objective for one frozen large network and one distribution.

    The large-network constants are computed on construction unless passed
    in. value() and value_and_gradients() cost O(K M D + M^2 D): the K x M
    cross block and the upper triangle of the symmetric M x M pair block are
    visited in row chunks of at most _CHUNK_ELEMENTS entries per temporary.
    """

    def __init__(self, large: RbfNetwork, dist: InputDistribution,
                 constants: Optional[LargeNetworkConstants] = None):
        dist.check_dim(large.dim)
        self.large = large
        self.dist = dist
        self._width = _width(dist)
        self.constants = constants if constants is not None else large_network_constants(large, dist)

    @property
    def large_contraction(self) -> float:
        return self.constants.contraction

    @property
    def large_singles(self) -> np.ndarray:
        return self.constants.singles

    @property
    def large_mean_term(self) -> float:
        return self.constants.mean_term

    def _check_small(self, small: RbfNetwork) -> None:
        if small.dim != self.large.dim:
            raise DimensionMismatchError('small network dimension', self.large.dim, small.dim)

    def _pair_sums(self, small: RbfNetwork, with_grad: bool) -> _BlockSums:
        # E(g, g, u, v) is symmetric, so d_u at (i, j) equals d_v at (j, i) and
        # every strictly off-diagonal block stands for itself and its transpose.
        g = small.gamma
        beta = small.beta
        theta = small.theta
        m = small.num_centroids
        sums = _BlockSums(0.0, np.zeros(m), np.zeros_like(theta))
        for lo, hi in _row_chunks(m, m, small.dim, self._width):
            rows = slice(lo, hi)
            diag = kernel_terms(g, g, theta[rows], theta[rows], self.dist, with_grad)
            S = diag.value
            w = beta[rows, None] * beta[None, rows] * S
            sums.quadratic += float(np.sum(w))
            sums.weighted[rows] += S @ beta[rows]
            if with_grad:
                sums.d_theta[rows] += np.einsum('pj,pjd->pd', w, diag.d_u)
                sums.d_gamma += float(np.sum(w * (diag.d_k + diag.d_r)))
            if hi == m:
                continue

            rest = slice(hi, m)
            off = kernel_terms(g, g, theta[rows], theta[rest], self.dist, with_grad)
            S = off.value
            w = beta[rows, None] * beta[None, rest] * S
            sums.quadratic += 2.0 * float(np.sum(w))
            sums.weighted[rows] += S @ beta[rest]
            sums.weighted[rest] += S.T @ beta[rows]
            if with_grad:
                sums.d_theta[rows] += np.einsum('pj,pjd->pd', w, off.d_u)
                sums.d_theta[rest] += np.einsum('ip,ipd->pd', w, off.d_v)
                sums.d_gamma += 2.0 * float(np.sum(w * (off.d_k + off.d_r)))
        return sums

    def _cross_sums(self, small: RbfNetwork, with_grad: bool) -> _BlockSums:
        k = self.large.gamma
        b = self.large.beta
        Z = self.large.theta
        g = small.gamma
        beta = small.beta
        sums = _BlockSums(0.0, np.zeros(small.num_centroids), np.zeros_like(small.theta))
        for lo, hi in _row_chunks(self.large.num_centroids, small.num_centroids, small.dim, self._width):
            block = kernel_terms(k, g, Z[lo:hi], small.theta, self.dist, with_grad)
            X = block.value
            b_rows = b[lo:hi]
            sums.weighted += X.T @ b_rows
            if with_grad:
                w = b_rows[:, None] * beta[None, :] * X
                sums.d_theta += np.einsum('ip,ipd->pd', w, block.d_v)
                sums.d_gamma += float(np.sum(w * block.d_r))
        sums.quadratic = float(sums.weighted @ beta)
        return sums

    def _evaluate(self, small: RbfNetwork, with_grad: bool) -> Tuple[float, Optional[ParamGradients]]:
        self._check_small(small)
        g = small.gamma
        beta = small.beta
        offset = self.large.alpha - small.alpha

        pairs = self._pair_sums(small, with_grad)
        cross = self._cross_sums(small, with_grad)
        singles = kernel_terms(g, 0.0, small.theta, np.zeros((1, small.dim)), self.dist, with_grad)
        e_small = singles.value[:, 0]
        mean_gap = self.constants.mean_term - float(beta @ e_small)
        objective = (offset ** 2 + self.constants.contraction + pairs.quadratic
                     + 2.0 * offset * mean_gap - 2.0 * cross.quadratic)
        if not with_grad:
            return objective, None

        # Weighted kernel values; each Theta/gamma term carries a beta factor.
        w_singles = beta * e_small
        d_theta = (2.0 * pairs.d_theta
                   - 2.0 * offset * w_singles[:, None] * singles.d_u[:, 0, :]
                   - 2.0 * cross.d_theta)
        d_gamma = (pairs.d_gamma
                   - 2.0 * offset * float(w_singles @ singles.d_k[:, 0])
                   - 2.0 * cross.d_gamma)
        grads = ParamGradients(
            d_log_gamma=g * d_gamma,
            d_alpha=-2.0 * offset - 2.0 * mean_gap,
            d_beta=2.0 * pairs.weighted - 2.0 * offset * e_small - 2.0 * cross.weighted,
            d_theta=d_theta,
        )
        return objective, grads

    def raw_value(self, small: RbfNetwork) -> float:
        """Objective before clamping small negative cancellation noise."""
        return self._evaluate(small, with_grad=False)[0]

    def value(self, small: RbfNetwork) -> float:
        return clamp_objective(self.raw_value(small))

    def value_and_gradients(self, small: RbfNetwork) -> Tuple[float, ParamGradients]:
        """Raw objective and its gradient with respect to every small-network parameter."""
        return self._evaluate(small, with_grad=True)


def clamp_objective(raw: float) -> float:
    if raw >= 0 or math.isnan(raw):
        return raw
    if raw < -NEGATIVE_TOLERANCE:
        logger.warning("Pruning objective %.3e below cancellation tolerance; clamping to 0", raw,
                       extra={'extra_fields': {'raw_objective': raw}})
    return 0.0


# Weak on both keys; values hold only derived arrays, never a key.
_constants_cache: "weakref.WeakKeyDictionary[RbfNetwork, weakref.WeakKeyDictionary]" = weakref.WeakKeyDictionary()
_cache_lock = threading.Lock()


def cached_constant_count() -> int:
    """Number of live (large network, distribution) entries in the constants cache."""
    with _cache_lock:
        return sum(len(per_dist) for per_dist in _constants_cache.values())


def objective_for(large: RbfNetwork, dist: InputDistribution) -> PruningObjective:
    """PruningObjective reusing cached large-network constants for the pair."""
    with _cache_lock:
        per_dist = _constants_cache.setdefault(large, weakref.WeakKeyDictionary())
        constants = per_dist.get(dist)
        if constants is None:
            constants = large_network_constants(large, dist)
            per_dist[dist] = constants
    return PruningObjective(large, dist, constants)


def pruning_objective(large: RbfNetwork, small: RbfNetwork, dist: InputDistribution) -> float:
    """E_p[(f_large(x) - f_small(x))^2], clamped at 0."""
    if small.dim != large.dim:
        raise DimensionMismatchError('small network dimension', large.dim, small.dim)
    return objective_for(large, dist).value(small)


def pruning_objective_gradients(large: RbfNetwork, small: RbfNetwork,
                                dist: InputDistribution) -> Tuple[float, ParamGradients]:
    """Pruning objective and its gradient with respect to the small network."""
    if small.dim != large.dim:
        raise DimensionMismatchError('small network dimension', large.dim, small.dim)
    objective, grads = objective_for(large, dist).value_and_gradients(small)
    return clamp_objective(objective), grads


@dataclass(frozen=True)
class PruneConfig:
    """Pruning hyperparameters."""

    target_centroids: int
    restarts: int = 10
    lr_start: float = 1e-3
    lr_floor: float = 1e-5
    patience: int = 10
    grace: int = 10
    seed: int = 0
    max_iterations: int = 200_000
    threads: int = 1
    deterministic: bool = True
    record_history: bool = True

    def __post_init__(self):
        if self.target_centroids < 1:
            raise InvalidArgumentError('target_centroids', self.target_centroids, "must be >= 1")
        if self.restarts < 1:
            raise InvalidArgumentError('restarts', self.restarts, "must be >= 1")
        if not (self.lr_start >= self.lr_floor > 0):
            raise InvalidArgumentError('lr_start', self.lr_start, "need lr_start >= lr_floor > 0")
        if self.max_iterations < 1:
            raise InvalidArgumentError('max_iterations', self.max_iterations, "must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    lr: float
    best_objective: float


@dataclass
class RestartReport:
    """Outcome of one seeded restart."""

    restart: int
    initial_objective: float
    final_objective: float
    iterations: int
    stop_reason: Optional[StopReason]
    failed: bool = False
    centroid_indices: List[int] = field(default_factory=list)
    history: List[IterationRecord] = field(default_factory=list)

    @property
    def sqrt_objective(self) -> float:
        return math.sqrt(max(self.final_objective, 0.0))

    def summary(self) -> Dict[str, object]:
        return {
            'restart': self.restart,
            'initial_objective': self.initial_objective,
            'final_objective': self.final_objective,
            'sqrt_objective': self.sqrt_objective if not self.failed else None,
            'iterations': self.iterations,
            'stop_reason': self.stop_reason.value if self.stop_reason else None,
            'failed': self.failed,
            'centroid_indices': self.centroid_indices,
        }


@dataclass
class PruneResult:
    network: RbfNetwork
    objective: float
    best_restart: int
    restarts: List[RestartReport]

    @property
    def sqrt_objective(self) -> float:
        return math.sqrt(max(self.objective, 0.0))


def initial_small_network(large: RbfNetwork, indices: np.ndarray) -> RbfNetwork:
    """Small network whose centroids and weights are a subset of the large one's."""
    return RbfNetwork(large.log_gamma, large.alpha, large.beta[indices], large.theta[indices])


def _run_restart(large: RbfNetwork, objective: PruningObjective, config: PruneConfig,
                 index: int) -> Tuple[Optional[RbfNetwork], RestartReport]:
    rng = np.random.default_rng([config.seed, index])
    indices = rng.choice(large.num_centroids, size=config.target_centroids, replace=False)
    small = initial_small_network(large, indices)

    schedule = ScheduleState(lr_start=config.lr_start, floor_lr=config.lr_floor,
                             patience=config.patience, grace=config.grace)
    adam = AdamState.for_network(small, schedule.current_lr)
    report = RestartReport(restart=index, initial_objective=math.nan, final_objective=math.nan,
                           iterations=0, stop_reason=None, centroid_indices=[int(i) for i in indices])

    for iteration in range(config.max_iterations):
        value, grads = objective.value_and_gradients(small)
        if iteration == 0:
            report.initial_objective = clamp_objective(value)
        if not (math.isfinite(value) and grads.is_finite()):
            logger.warning("Restart %d hit a non-finite objective at iteration %d", index, iteration,
                           extra={'restart': index, 'iteration': iteration})
            report.failed = True
            report.stop_reason = StopReason.NON_FINITE
            report.iterations = iteration
            return None, report

        decision, schedule = schedule_update(schedule, value, small)
        if config.record_history:
            report.history.append(IterationRecord(iteration, value, schedule.current_lr, schedule.best_metric))
        if decision is Decision.STOP:
            report.stop_reason = StopReason.LR_FLOOR
            report.iterations = iteration + 1
            break
        if decision is Decision.REDUCE:
            logger.debug("Restart %d: learning rate reduced to %.1e", index, schedule.current_lr,
                         extra={'restart': index, 'iteration': iteration})
        adam = adam.with_lr(schedule.current_lr)
        try:
            small, adam = adam_step(small, grads, adam)
        except NonFiniteValueError:
            report.failed = True
            report.stop_reason = StopReason.NON_FINITE
            report.iterations = iteration + 1
            return None, report
    else:
        report.stop_reason = StopReason.MAX_ITERATIONS
        report.iterations = config.max_iterations

    report.final_objective = clamp_objective(schedule.best_metric)
    logger.info("Restart %d finished: objective %.6g after %d iterations (%s)",
                index, report.final_objective, report.iterations, report.stop_reason.value,
                extra={'restart': index, 'iteration': report.iterations})
    return schedule.best_params, report


def prune(large: RbfNetwork, dist: InputDistribution, config: PruneConfig) -> PruneResult:
    """
    Fit a network with config.target_centroids centroids to a large one.

    Each restart samples centroids (with their weights) from the large
    network without replacement, copies alpha and log_gamma, and runs Adam
    on the exact objective under the pruning schedule. The restart with the
    lowest objective wins; ties go to the lower restart index. Restart i
    draws from the stream seeded by (seed, i), so serial and threaded runs
    return identical results.
    """
    if config.target_centroids > large.num_centroids:
        raise InvalidArgumentError('target_centroids', config.target_centroids,
                                   f"must be <= K = {large.num_centroids}")
    objective = objective_for(large, dist)

    indices = range(config.restarts)
    if config.threads > 1 and config.restarts > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(lambda i: _run_restart(large, objective, config, i), indices))
    else:
        outcomes = [_run_restart(large, objective, config, i) for i in indices]

    reports = [report for _, report in outcomes]
    finished = [(report.final_objective, report.restart, net)
                for net, report in outcomes if not report.failed and net is not None]
    if not finished:
        raise NonFiniteValueError('pruning objective (all restarts failed)')
    best_value, best_index, best_net = min(finished, key=lambda item: (item[0], item[1]))
    return PruneResult(network=best_net, objective=best_value, best_restart=best_index, restarts=reports)


def centroid_feature_profile(net: RbfNetwork, clip: float = 2.0) -> Dict[str, List[float]]:
    """
    Per-input-dimension magnitude of the centroid coordinates.

    Each |theta_{i,d}| is clipped at `clip` and divided by it, so 1 means the
    coordinate is at least `clip` in magnitude. Returns the mean and standard
    deviation over centroids and the mean divided by its largest entry.
    """
    if clip <= 0:
        raise InvalidArgumentError('clip', clip, "must be > 0")
    scaled = np.minimum(np.abs(net.theta), clip) / clip
    mean = scaled.mean(axis=0)
    std = scaled.std(axis=0)
    top = float(mean.max())
    normalized = mean / top if top > 0 else np.zeros_like(mean)
    return {'mean': mean.tolist(), 'std': std.tolist(), 'normalized_mean': normalized.tolist()}
