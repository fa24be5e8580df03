"""
Shared plumbing of the command classes.
"""

import hashlib
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Union

from rbfprune.core.monitoring import RunMonitor
from rbfprune.utils.config import config_hash
from rbfprune.utils.environment import get_library_versions
from rbfprune.utils.logging import get_logger


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for block in iter(lambda: handle.read(1 << 20), b''):
            digest.update(block)
    return digest.hexdigest()


class Command:
    """Base class: a logger, a run monitor and provenance helpers."""

    def __init__(self, monitor: Optional[RunMonitor] = None):
        self.logger = get_logger(self.__class__.__module__)
        self.monitor = monitor or RunMonitor()

    @staticmethod
    def provenance(resolved: Dict[str, Any], seed: int, metrics: Dict[str, Any]) -> Dict[str, Any]:
        """Model-file provenance. Holds no timestamps or host names."""
        return {
            'config_hash': config_hash(resolved),
            'seed': seed,
            'config': resolved,
            'metrics': metrics,
            'libraries': get_library_versions(),
        }

    @staticmethod
    def run_stamp(wall_time: float) -> Dict[str, Any]:
        return {'timestamp': datetime.now().isoformat(), 'wall_time': wall_time}
