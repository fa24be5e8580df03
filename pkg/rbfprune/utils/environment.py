"""
Runtime environment details recorded in model provenance and --version output.
"""

import platform
from typing import Any, Dict

import numpy
import psutil
import scipy

from rbfprune import __version__


def get_library_versions() -> Dict[str, str]:
    """Versions that determine numerical results; kept free of host details."""
    return {
        'rbfprune': __version__,
        'python': platform.python_version(),
        'numpy': numpy.__version__,
        'scipy': scipy.__version__,
    }


def get_system_info() -> Dict[str, Any]:
    """Host summary for --version."""
    memory = psutil.virtual_memory()
    return {
        'platform': platform.system(),
        'platform_release': platform.release(),
        'architecture': platform.machine(),
        'python_version': platform.python_version(),
        'cpu_count': psutil.cpu_count(),
        'memory_total_gb': round(memory.total / (1024 ** 3), 2),
        'libraries': get_library_versions(),
    }
