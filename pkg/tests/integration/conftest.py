import json
import logging
import sys

import pytest

from rbfprune import main as cli


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    level, handlers = root.level, list(root.handlers)
    yield
    for handler in list(root.handlers):
        root.removeHandler(handler)
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)
    logging.captureWarnings(False)


class CliResult:
    def __init__(self, code, out, err):
        self.code = code
        self.out = out
        self.err = err

    @property
    def json(self):
        return json.loads(self.out)

    @property
    def error(self):
        return json.loads(self.err.strip().splitlines()[-1])


@pytest.fixture
def run_cli(monkeypatch, capsys):
    def run(*argv):
        monkeypatch.setattr(sys, 'argv', ['rbfprune', *[str(a) for a in argv]])
        code = cli.main()
        captured = capsys.readouterr()
        return CliResult(code, captured.out, captured.err)
    return run


@pytest.fixture
def toy_csv(tmp_path, run_cli):
    path = tmp_path / 'toy.csv'
    assert run_cli('gen-toy', '--n', 300, '--seed', 7, '--out', path).code == 0
    return path


@pytest.fixture
def train_flags():
    return TRAIN_FLAGS


TRAIN_FLAGS = ('--centroids', 8, '--max-epochs', 25, '--patience', 3, '--grace', 3, '--batch-size', 32)


@pytest.fixture
def trained_model(tmp_path, run_cli, toy_csv):
    path = tmp_path / 'large.json'
    result = run_cli('train', '--data', toy_csv, '--model-out', path, *TRAIN_FLAGS, '--seed', 1)
    assert result.code == 0, result.err
    return path
