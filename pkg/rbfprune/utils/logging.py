"""
Logging configuration for the rbfprune CLI.
"""

import logging
import sys

from rbfprune.core.monitoring import JSONFormatter


def setup_logging(level=logging.WARNING, json_format: bool = False):
    """
    Setup logging configuration for rbfprune.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
        json_format: Emit one JSON object per record instead of text lines
    """
    if json_format:
        formatter = JSONFormatter()
    else:
        formatter = logging.Formatter(
            fmt='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)

    # Replace rather than stack handlers when called more than once
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        if getattr(handler, '_rbfprune', False):
            root_logger.removeHandler(handler)
    console_handler._rbfprune = True
    root_logger.setLevel(level)
    root_logger.addHandler(console_handler)

    # numpy/scipy warnings are routed through the warnings module, not logging
    logging.captureWarnings(True)
    return console_handler


def get_logger(name):
    """Get a logger instance with the given name."""
    return logging.getLogger(name)
