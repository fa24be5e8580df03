"""
Structured logging and run monitoring for rbfprune.

Provides a JSON log formatter, process resource metrics via psutil, and
timing of long operations (training, pruning, conformance suites).
"""
import json
import logging
import time
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import psutil


class JSONFormatter(logging.Formatter):
    """One JSON object per log record."""

    context_fields = ('operation', 'duration', 'status', 'epoch', 'restart', 'iteration')

    def format(self, record):
        log_data = {
            'log_ts': datetime.fromtimestamp(record.created).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno
        }

        if record.exc_info:
            log_data['exception'] = self.formatException(record.exc_info)

        if hasattr(record, 'extra_fields'):
            extra = dict(record.extra_fields)
            # Metric timestamps must not shadow the record's own log_ts
            if 'timestamp' in extra and 'event_ts' not in extra:
                extra['event_ts'] = extra.pop('timestamp')
            log_data.update(extra)

        for field in self.context_fields:
            if hasattr(record, field):
                log_data[field] = getattr(record, field)

        return json.dumps(log_data, default=str)


class RunMonitor:
    """Time operations and collect metrics for one CLI invocation."""

    max_samples = 1000

    def __init__(self):
        self.metrics: Dict[str, List[Dict[str, Any]]] = {}
        self.start_time = time.time()
        self.logger = logging.getLogger('rbfprune.monitoring')
        self._process = psutil.Process()

    def log_metric(self, name: str, value: float, tags: Optional[Dict[str, Any]] = None,
                   unit: Optional[str] = None):
        """
        Record a metric and emit it as a log record.

        Args:
            name: Metric name (e.g., 'prune_duration_seconds')
            value: Metric value
            tags: Optional tags for categorization
            unit: Optional unit (e.g., 'seconds', 'mse')
        """
        metric_data = {
            'metric': name,
            'value': value,
            'event_ts': time.time(),
            'tags': tags or {},
            'unit': unit
        }
        logging.getLogger('rbfprune.metrics').info(
            f"Metric: {name}",
            extra={'extra_fields': metric_data, 'operation': 'metric_collection'}
        )

        samples = self.metrics.setdefault(name, [])
        samples.append(metric_data)
        if len(samples) > self.max_samples:
            self.metrics[name] = samples[-self.max_samples // 2:]

    def get_process_metrics(self) -> Dict[str, Any]:
        """Resource usage of this process."""
        try:
            with self._process.oneshot():
                memory = self._process.memory_info()
                return {
                    'memory_mb': memory.rss / (1024 ** 2),
                    'cpu_percent': self._process.cpu_percent(),
                    'threads': self._process.num_threads(),
                    'cpu_count': psutil.cpu_count(),
                    'uptime_seconds': time.time() - self.start_time,
                }
        except psutil.Error as e:
            self.logger.error(f"Error collecting process metrics: {e}")
            return {'error': str(e), 'uptime_seconds': time.time() - self.start_time}

    @contextmanager
    def measure_operation(self, operation_name: str, tags: Optional[Dict[str, Any]] = None):
        """
        Log start, success or failure of an operation with its duration.

        Args:
            operation_name: Name of the operation being measured
            tags: Optional tags for categorization
        """
        tags = tags or {}
        logger = logging.getLogger('rbfprune.operations')
        start_metrics = self.get_process_metrics()
        start_time = time.perf_counter()
        logger.info(
            f"Starting operation: {operation_name}",
            extra={'operation': operation_name, 'status': 'start',
                   'extra_fields': {'tags': tags, 'process': start_metrics}}
        )

        try:
            yield
        except Exception as e:
            duration = time.perf_counter() - start_time
            logger.error(
                f"Operation failed: {operation_name}",
                extra={'operation': operation_name, 'status': 'failure', 'duration': duration,
                       'extra_fields': {'tags': tags, 'error': str(e),
                                        'exception_type': type(e).__name__}}
            )
            self.log_metric(f'{operation_name}_duration_seconds', duration,
                            tags={**tags, 'status': 'failure'}, unit='seconds')
            raise

        duration = time.perf_counter() - start_time
        end_metrics = self.get_process_metrics()
        logger.info(
            f"Operation completed: {operation_name}",
            extra={'operation': operation_name, 'status': 'success', 'duration': duration,
                   'extra_fields': {'tags': tags,
                                    'memory_change_mb': end_metrics.get('memory_mb', 0.0)
                                    - start_metrics.get('memory_mb', 0.0)}}
        )
        self.log_metric(f'{operation_name}_duration_seconds', duration,
                        tags={**tags, 'status': 'success'}, unit='seconds')

    def get_metric_summary(self, metric_name: str) -> Dict[str, Any]:
        """Count, min, max, mean and latest value of a metric."""
        samples = self.metrics.get(metric_name)
        if not samples:
            return {'error': f'Metric {metric_name} not found'}
        values = [m['value'] for m in samples]
        return {
            'count': len(values),
            'min': min(values),
            'max': max(values),
            'avg': sum(values) / len(values),
            'latest': values[-1],
            'unit': samples[-1].get('unit')
        }

    def export_metrics(self, output_file: Union[str, Path]) -> str:
        """Write collected metrics and their summaries to a JSON file."""
        export_data = {
            'export_timestamp': datetime.now().isoformat(),
            'process': self.get_process_metrics(),
            'collected_metrics': self.metrics,
            'metric_summaries': {name: self.get_metric_summary(name) for name in self.metrics},
        }
        with open(output_file, 'w') as f:
            json.dump(export_data, f, indent=2, default=str)
        return str(output_file)
