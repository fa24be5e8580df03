import json
import logging

from rbfprune.core.monitoring import JSONFormatter
from rbfprune.utils.logging import get_logger, setup_logging


def _restore(root, level, handlers):
    for handler in list(root.handlers):
        root.removeHandler(handler)
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)


def test_setup_logging_configures_root_logger():
    root = logging.getLogger()
    original_level = root.level
    original_handlers = list(root.handlers)

    try:
        setup_logging(logging.INFO)
        assert root.level == logging.INFO
        assert sum(getattr(h, '_rbfprune', False) for h in root.handlers) == 1

        # Reconfiguring replaces our handler instead of stacking a second one
        handler = setup_logging(logging.ERROR, json_format=True)
        assert root.level == logging.ERROR
        assert sum(getattr(h, '_rbfprune', False) for h in root.handlers) == 1
        assert isinstance(handler.formatter, JSONFormatter)
    finally:
        logging.captureWarnings(False)
        _restore(root, original_level, original_handlers)


def test_json_output(capsys):
    root = logging.getLogger()
    original_level = root.level
    original_handlers = list(root.handlers)

    try:
        setup_logging(logging.INFO, json_format=True)
        get_logger('rbfprune.test').info("restart done", extra={'restart': 2})
        line = capsys.readouterr().err.strip().splitlines()[-1]
        payload = json.loads(line)
        assert payload['message'] == 'restart done'
        assert payload['restart'] == 2
        assert payload['logger'] == 'rbfprune.test'
    finally:
        logging.captureWarnings(False)
        _restore(root, original_level, original_handlers)


def test_get_logger_returns_named_logger():
    assert get_logger('rbfprune.test').name == 'rbfprune.test'
