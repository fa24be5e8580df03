"""
Input distributions under which pruning expectations are taken.

Three families, all independent across dimensions:
    gaussian_mixture  per-dimension mixture of normals
    uniform           axis-aligned box (low_i, high_i)
    bernoulli         outcomes +1 / -1 with P(+1) = q_i
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Sequence, Union

import numpy as np

from .exceptions import DimensionMismatchError, InvalidDistributionError

_WEIGHT_TOLERANCE = 1e-12


class DistributionKind(str, Enum):
    GAUSSIAN_MIXTURE = "gaussian_mixture"
    UNIFORM = "uniform"
    BERNOULLI = "bernoulli"


class InputDistribution:
    """Common interface of the three families."""

    kind: DistributionKind

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError

    def check_dim(self, dim: int, what: str = 'distribution dimension') -> None:
        if self.dim != dim:
            raise DimensionMismatchError(what, dim, self.dim)


def _readonly(values, name: str, kind: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim or arr.shape[0] < 1:
        raise InvalidDistributionError(kind, f"{name} must be a non-empty {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistributionError(kind, f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GaussianMixture(InputDistribution):
    """
    Per-dimension Gaussian mixtures stored as padded (D, L) arrays.

    Dimensions with fewer than L components are padded with zero-weight,
    unit-variance entries, which contribute nothing to any expectation.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    kind = DistributionKind.GAUSSIAN_MIXTURE

    def __post_init__(self):
        name = self.kind.value
        weights = _readonly(self.weights, 'weights', name, 2)
        means = _readonly(self.means, 'means', name, 2)
        variances = _readonly(self.variances, 'variances', name, 2)
        if not (weights.shape == means.shape == variances.shape):
            raise InvalidDistributionError(name, "weights, means and variances must share one shape")
        if np.any(weights < 0):
            raise InvalidDistributionError(name, "weights must be >= 0")
        sums = weights.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > _WEIGHT_TOLERANCE):
            raise InvalidDistributionError(name, f"weights must sum to 1 per dimension, got {sums.tolist()}")
        if np.any(variances <= 0):
            raise InvalidDistributionError(name, "variances must be > 0")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'means', means)
        object.__setattr__(self, 'variances', variances)

    @classmethod
    def from_components(cls, weights: Sequence[Sequence[float]], means: Sequence[Sequence[float]],
                        variances: Sequence[Sequence[float]]) -> "GaussianMixture":
        """Build from ragged per-dimension component lists."""
        if not (len(weights) == len(means) == len(variances)):
            raise InvalidDistributionError('gaussian_mixture', "per-dimension lists differ in length")
        width = max(len(w) for w in weights)
        padded_w = np.zeros((len(weights), width))
        padded_m = np.zeros((len(weights), width))
        padded_v = np.ones((len(weights), width))
        for d, (w, m, v) in enumerate(zip(weights, means, variances)):
            if not (len(w) == len(m) == len(v)) or len(w) == 0:
                raise InvalidDistributionError('gaussian_mixture', f"dimension {d} has inconsistent components")
            padded_w[d, :len(w)] = w
            padded_m[d, :len(m)] = m
            padded_v[d, :len(v)] = v
        return cls(padded_w, padded_m, padded_v)

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty((n, self.dim))
        for d in range(self.dim):
            comp = rng.choice(self.weights.shape[1], size=n, p=self.weights[d])
            out[:, d] = rng.normal(self.means[d, comp], np.sqrt(self.variances[d, comp]))
        return out

    def components(self, d: int):
        """Non-padded (weight, mean, variance) triples of dimension d."""
        keep = self.weights[d] > 0
        return list(zip(self.weights[d, keep], self.means[d, keep], self.variances[d, keep]))

    def to_dict(self) -> Dict[str, Any]:
        comps = [self.components(d) for d in range(self.dim)]
        return {
            'kind': self.kind.value,
            'weights': [[float(w) for w, _, _ in c] for c in comps],
            'means': [[float(m) for _, m, _ in c] for c in comps],
            'variances': [[float(v) for _, _, v in c] for c in comps],
        }


@dataclass(frozen=True, eq=False)
class UniformBox(InputDistribution):
    """Independent uniform coordinates on (low_i, high_i)."""

    low: np.ndarray
    high: np.ndarray

    kind = DistributionKind.UNIFORM

    def __post_init__(self):
        low = _readonly(self.low, 'low', self.kind.value, 1)
        high = _readonly(self.high, 'high', self.kind.value, 1)
        if low.shape != high.shape:
            raise InvalidDistributionError(self.kind.value, "low and high differ in length")
        if np.any(low >= high):
            raise InvalidDistributionError(self.kind.value, "need low < high in every dimension")
        object.__setattr__(self, 'low', low)
        object.__setattr__(self, 'high', high)

    @property
    def dim(self) -> int:
        return int(self.low.shape[0])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, self.dim))

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'low': self.low.tolist(), 'high': self.high.tolist()}


@dataclass(frozen=True, eq=False)
class Bernoulli(InputDistribution):
    """Independent +1/-1 coordinates with P(x_i = +1) = q_i."""

    q: np.ndarray

    kind = DistributionKind.BERNOULLI

    def __post_init__(self):
        q = _readonly(self.q, 'q', self.kind.value, 1)
        if np.any(q < 0) or np.any(q > 1):
            raise InvalidDistributionError(self.kind.value, "q must lie in [0, 1]")
        object.__setattr__(self, 'q', q)

    @property
    def dim(self) -> int:
        return int(self.q.shape[0])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.where(rng.random((n, self.dim)) < self.q, 1.0, -1.0)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'q': self.q.tolist()}


def std_normal(dim: int) -> GaussianMixture:
    return GaussianMixture(np.ones((dim, 1)), np.zeros((dim, 1)), np.ones((dim, 1)))


def uniform_box(dim: int, low: float, high: float) -> UniformBox:
    return UniformBox(np.full(dim, float(low)), np.full(dim, float(high)))


def bernoulli(dim: int, q: float = 0.5) -> Bernoulli:
    return Bernoulli(np.full(dim, float(q)))


_PRESET = re.compile(r'^\s*(std_normal|uniform|bernoulli)\s*(?:\(([^)]*)\))?\s*$')


def _preset_args(text: str, expected: int, preset: str):
    try:
        values = [float(v) for v in text.split(',')] if text else []
    except ValueError:
        raise InvalidDistributionError(preset, f"non-numeric preset arguments: {text!r}")
    if len(values) != expected:
        raise InvalidDistributionError(preset, f"expected {expected} argument(s), got {len(values)}")
    return values


def parse_distribution(spec: Union[str, Dict[str, Any], InputDistribution], dim: int) -> InputDistribution:
    """
    Build a distribution from a preset string or a config object.

    Presets: 'std_normal', 'uniform(a,b)', 'bernoulli(q)' (q defaults to 0.5);
    they are broadcast to dim dimensions. Objects carry 'kind' plus
    per-dimension arrays and must already have dim dimensions.
    """
    if isinstance(spec, InputDistribution):
        dist = spec
    elif isinstance(spec, str):
        match = _PRESET.match(spec)
        if not match:
            raise InvalidDistributionError('preset', f"unknown preset {spec!r}")
        name, args = match.group(1), (match.group(2) or '').strip()
        if name == 'std_normal':
            _preset_args(args, 0, name)
            dist = std_normal(dim)
        elif name == 'uniform':
            low, high = _preset_args(args, 2, name)
            dist = uniform_box(dim, low, high)
        else:
            q = _preset_args(args, 1, name)[0] if args else 0.5
            dist = bernoulli(dim, q)
    elif isinstance(spec, dict):
        dist = _from_dict(spec)
    else:
        raise InvalidDistributionError('unknown', f"cannot build a distribution from {type(spec).__name__}")
    dist.check_dim(dim)
    return dist


def _from_dict(spec: Dict[str, Any]) -> InputDistribution:
    allowed = {
        DistributionKind.GAUSSIAN_MIXTURE.value: {'kind', 'weights', 'means', 'variances'},
        DistributionKind.UNIFORM.value: {'kind', 'low', 'high'},
        DistributionKind.BERNOULLI.value: {'kind', 'q'},
    }
    kind = spec.get('kind')
    if kind not in allowed:
        raise InvalidDistributionError(str(kind), f"kind must be one of {sorted(allowed)}")
    unknown = set(spec) - allowed[kind]
    missing = allowed[kind] - set(spec)
    if unknown or missing:
        raise InvalidDistributionError(kind, f"unknown keys {sorted(unknown)}, missing keys {sorted(missing)}")
    if kind == DistributionKind.GAUSSIAN_MIXTURE.value:
        return GaussianMixture.from_components(spec['weights'], spec['means'], spec['variances'])
    if kind == DistributionKind.UNIFORM.value:
        return UniformBox(spec['low'], spec['high'])
    return Bernoulli(spec['q'])
