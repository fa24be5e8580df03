"""
Run configuration files.

A run config is a JSON object with the optional sections

    train   TrainConfig fields
    prune   PruneConfig fields
    dist    preset string or distribution object
    split   {"train": ..., "validation": ..., "test": ...}
    paths   {"data", "model", "model_out", "report_out", "out"}

Unknown keys anywhere are rejected. Command-line flags override the file.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type, TypeVar, Union

from rbfprune.core.exceptions import ConfigError, InvalidArgumentError
from rbfprune.core.pruning import PruneConfig
from rbfprune.core.training import TrainConfig

T = TypeVar('T')

SECTIONS = ('train', 'prune', 'dist', 'split', 'paths')
SPLIT_KEYS = ('train', 'validation', 'test')
PATH_KEYS = ('data', 'model', 'model_out', 'report_out', 'out')
DEFAULT_SPLIT = (0.8, 0.2, 0.0)


@dataclass
class RunConfigFile:
    train: Dict[str, Any] = field(default_factory=dict)
    prune: Dict[str, Any] = field(default_factory=dict)
    dist: Optional[Union[str, Dict[str, Any]]] = None
    split: Dict[str, Any] = field(default_factory=dict)
    paths: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: Any) -> 'RunConfigFile':
        if not isinstance(doc, dict):
            raise ConfigError("top level must be an object")
        unknown = sorted(set(doc) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"unknown sections {unknown}", keys=unknown)

        config = cls(
            train=_section(doc, 'train', [f.name for f in dataclasses.fields(TrainConfig)]),
            prune=_section(doc, 'prune', [f.name for f in dataclasses.fields(PruneConfig)]),
            split=_section(doc, 'split', SPLIT_KEYS),
            paths=_section(doc, 'paths', PATH_KEYS),
            dist=doc.get('dist'),
        )
        if config.dist is not None and not isinstance(config.dist, (str, dict)):
            raise ConfigError("dist must be a preset string or an object", section='dist')
        bad_paths = sorted(key for key, value in config.paths.items() if not isinstance(value, str))
        if bad_paths:
            raise ConfigError(f"paths {bad_paths} must be strings", section='paths', keys=bad_paths)
        return config

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def split_sizes(self) -> Tuple[Any, Any, Any]:
        if not self.split:
            return DEFAULT_SPLIT
        sizes = tuple(self.split.get(key, 0) for key in SPLIT_KEYS)
        for key, size in zip(SPLIT_KEYS, sizes):
            if size is not None and (isinstance(size, bool) or not isinstance(size, (int, float))):
                raise ConfigError(f"split.{key} must be a number or null", section='split', keys=[key])
        return sizes


def _section(doc: Dict[str, Any], name: str, allowed) -> Dict[str, Any]:
    section = doc.get(name, {})
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f"section {name!r} must be an object", section=name)
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys {unknown} in section {name!r}", section=name, keys=unknown)
    return dict(section)


def load_run_config(path: Optional[Union[str, Path]]) -> RunConfigFile:
    """Parse a run config; no path gives an empty config (all defaults)."""
    if path is None:
        return RunConfigFile()
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON (line {e.lineno}: {e.msg})")
    return RunConfigFile.from_dict(doc)


def _expected_type(f: dataclasses.Field) -> type:
    if f.default is not dataclasses.MISSING:
        return type(f.default)
    return int


def _check_type(section: str, key: str, value: Any, expected: type) -> Any:
    if expected is bool:
        ok = isinstance(value, bool)
    elif expected is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif expected is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{section}.{key} must be of type {expected.__name__}, got {value!r}",
                          section=section, keys=[key])
    return value


def build_dataclass(cls: Type[T], section: str, values: Dict[str, Any],
                    overrides: Optional[Dict[str, Any]] = None) -> T:
    """
    Instantiate a config dataclass from file values plus non-None overrides.

    Raises:
        ConfigError: a value has the wrong type, a required field is missing
            or the dataclass rejects the combination
    """
    merged = dict(values)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in merged:
            kwargs[f.name] = _check_type(section, f.name, merged[f.name], _expected_type(f))
        elif f.default is dataclasses.MISSING:
            raise ConfigError(f"{section}.{f.name} is required", section=section, keys=[f.name])
    try:
        return cls(**kwargs)
    except InvalidArgumentError as e:
        raise ConfigError(str(e), section=section, keys=[e.context.get('parameter')])


def build_train_config(config: RunConfigFile, **overrides) -> TrainConfig:
    return build_dataclass(TrainConfig, 'train', config.train, overrides)


def build_prune_config(config: RunConfigFile, **overrides) -> PruneConfig:
    return build_dataclass(PruneConfig, 'prune', config.prune, overrides)


def config_hash(resolved: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a resolved configuration."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()
