"""
prune command.
"""

import dataclasses
import time
from typing import Any, Dict, Optional

from rbfprune.commands.base import Command, file_sha256
from rbfprune.core.distributions import parse_distribution
from rbfprune.core.pruning import prune
from rbfprune.utils.config import build_prune_config, load_run_config
from rbfprune.utils.io import load_model, save_model, write_report

DEFAULT_DISTRIBUTION = 'std_normal'


class PruneCommand(Command):
    """Fit a small network to a trained one under an input distribution."""

    def execute(self, model: str, model_out: str, report_out: Optional[str] = None,
                config_path: Optional[str] = None, dist: Optional[str] = None,
                history: bool = False, **overrides) -> Dict[str, Any]:
        """
        Prune a model file and write the best restart.

        The distribution comes from dist (command line), the config's dist
        section, or defaults to std_normal, in that order.
        """
        run_config = load_run_config(config_path)
        config = build_prune_config(run_config, record_history=history, **overrides)
        large = load_model(model)
        dist_spec = dist if dist is not None else (run_config.dist or DEFAULT_DISTRIBUTION)
        distribution = parse_distribution(dist_spec, large.dim)

        started = time.perf_counter()
        with self.monitor.measure_operation('prune', {'K': large.num_centroids,
                                                      'M': config.target_centroids,
                                                      'dist': distribution.kind.value}):
            result = prune(large, distribution, config)
        wall_time = time.perf_counter() - started

        metrics = {
            'objective': result.objective,
            'sqrt_objective': result.sqrt_objective,
            'best_restart': result.best_restart,
            'restart_objectives': [r.final_objective if not r.failed else None for r in result.restarts],
            'source_K': large.num_centroids,
        }
        self.monitor.log_metric('prune_sqrt_objective', result.sqrt_objective)

        config_dict = dataclasses.asdict(config)
        config_dict.pop('record_history')
        resolved = {
            'command': 'prune',
            'prune': config_dict,
            'dist': distribution.to_dict(),
            'model_sha256': file_sha256(model),
        }
        save_model(result.network, model_out, self.provenance(resolved, config.seed, metrics))

        if report_out:
            def records():
                for restart in result.restarts:
                    yield {'type': 'restart', **restart.summary()}
                    for step in restart.history:
                        yield {'type': 'iteration', 'restart': restart.restart,
                               'iteration': step.iteration, 'objective': step.objective,
                               'best_objective': step.best_objective, 'lr': step.lr}
            write_report(report_out, records(), {**metrics, **self.run_stamp(wall_time)})
        return {'model_out': model_out, **metrics}
