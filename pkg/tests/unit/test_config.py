import json

import pytest

from rbfprune.core.exceptions import ConfigError
from rbfprune.utils.config import (
    DEFAULT_SPLIT, RunConfigFile, build_prune_config, build_train_config, config_hash, load_run_config,
)


def write_config(tmp_path, doc):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(doc))
    return path


def test_missing_path_gives_defaults():
    config = load_run_config(None)
    assert config.train == {} and config.dist is None
    assert config.split_sizes() == DEFAULT_SPLIT


def test_sections_are_loaded(tmp_path):
    path = write_config(tmp_path, {
        'train': {'num_centroids': 40, 'lr_start': 0.01},
        'prune': {'target_centroids': 5, 'restarts': 3},
        'dist': 'uniform(-4,4)',
        'split': {'train': 100000, 'validation': 10000, 'test': None},
        'paths': {'data': 'data.csv'},
    })
    config = load_run_config(path)
    assert config.dist == 'uniform(-4,4)'
    assert config.split_sizes() == (100000, 10000, None)
    assert config.paths['data'] == 'data.csv'
    assert RunConfigFile.from_dict(config.to_dict()) == config


@pytest.mark.parametrize('doc, section', [
    ({'training': {}}, None),
    ({'train': {'num_centroid': 3}}, 'train'),
    ({'prune': []}, 'prune'),
    ({'prune': 0}, 'prune'),
    ({'train': ''}, 'train'),
    ({'split': False}, 'split'),
    ({'paths': {'data': 3}}, 'paths'),
    ({'dist': 3}, 'dist'),
    ({'paths': {'logs': 'x'}}, 'paths'),
])
def test_rejects_unknown_or_malformed(doc, section):
    with pytest.raises(ConfigError) as excinfo:
        RunConfigFile.from_dict(doc)
    assert excinfo.value.context['section'] == section


def test_rejects_bad_split():
    config = RunConfigFile.from_dict({'split': {'train': 'most'}})
    with pytest.raises(ConfigError):
        config.split_sizes()


def test_unreadable_or_invalid_file(tmp_path):
    with pytest.raises(ConfigError, match='cannot read'):
        load_run_config(tmp_path / 'absent.json')
    bad = tmp_path / 'bad.json'
    bad.write_text('{')
    with pytest.raises(ConfigError, match='not valid JSON'):
        load_run_config(bad)


def test_overrides_take_precedence():
    config = RunConfigFile.from_dict({'train': {'num_centroids': 40, 'batch_size': 128, 'lr_start': 1}})
    train = build_train_config(config, batch_size=32, seed=None)
    assert train.num_centroids == 40
    assert train.batch_size == 32
    assert train.seed == 0
    assert train.lr_start == 1.0 and isinstance(train.lr_start, float)


def test_prune_config_defaults():
    prune = build_prune_config(RunConfigFile(), target_centroids=4)
    assert (prune.restarts, prune.lr_start, prune.lr_floor, prune.patience, prune.grace) == (10, 1e-3, 1e-5, 10, 10)


@pytest.mark.parametrize('section, overrides, key', [
    ({'num_centroids': 3.5}, {}, 'num_centroids'),
    ({'num_centroids': True}, {}, 'num_centroids'),
    ({'num_centroids': 3, 'deterministic': 'yes'}, {}, 'deterministic'),
    ({}, {}, 'num_centroids'),
    ({'num_centroids': 0}, {}, 'num_centroids'),
])
def test_type_and_value_errors(section, overrides, key):
    config = RunConfigFile.from_dict({'train': section})
    with pytest.raises(ConfigError) as excinfo:
        build_train_config(config, **overrides)
    assert excinfo.value.context['keys'] == [key]


def test_config_hash_is_canonical():
    assert config_hash({'a': 1, 'b': [1, 2]}) == config_hash({'b': [1, 2], 'a': 1})
    assert config_hash({'a': 1}) != config_hash({'a': 2})
    assert len(config_hash({})) == 64


def test_null_section_means_empty():
    config = RunConfigFile.from_dict({'train': None, 'paths': None})
    assert config.train == {} and config.paths == {}
