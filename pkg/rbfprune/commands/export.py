"""
Plot-data exports: centroid tables and one-dimensional prediction curves.
"""

from typing import Any, Dict, List, Optional

import numpy as np

from rbfprune.commands.base import Command
from rbfprune.core.exceptions import DimensionMismatchError, InvalidArgumentError
from rbfprune.core.model import forward_batch
from rbfprune.core.pruning import centroid_feature_profile
from rbfprune.utils.io import load_model, write_table


class ExportCentroidsCommand(Command):
    """One CSV row per centroid: index, beta, then the centroid coordinates."""

    def execute(self, model: str, out: str, profile_out: Optional[str] = None,
                clip: float = 2.0) -> Dict[str, Any]:
        net = load_model(model)
        header = ['index', 'beta'] + [f'theta_{d}' for d in range(net.dim)]
        rows = ([i, float(net.beta[i])] + [float(t) for t in net.theta[i]]
                for i in range(net.num_centroids))
        write_table(out, header, rows)
        result: Dict[str, Any] = {'centroids': net.num_centroids, 'dim': net.dim, 'out': out}

        if profile_out:
            profile = centroid_feature_profile(net, clip=clip)
            write_table(profile_out, ['feature', 'mean', 'std', 'normalized_mean'],
                        ([d, m, s, n] for d, (m, s, n) in enumerate(zip(
                            profile['mean'], profile['std'], profile['normalized_mean']))))
            result['profile_out'] = profile_out
        return result


class CurveCommand(Command):
    """Evaluate one or more D = 1 models on an even grid."""

    def execute(self, models: List[str], start: float, stop: float, steps: int,
                out: str) -> Dict[str, Any]:
        if steps < 2:
            raise InvalidArgumentError('steps', steps, "must be >= 2")
        if not start < stop:
            raise InvalidArgumentError('from/to', (start, stop), "need from < to")

        networks = [load_model(path) for path in models]
        for path, net in zip(models, networks):
            if net.dim != 1:
                raise DimensionMismatchError(f'input dimension of {path}', 1, net.dim)

        grid = np.linspace(start, stop, steps)
        columns = [forward_batch(net, grid[:, None]) for net in networks]
        header = ['x'] + [f'model_{i}' for i in range(len(models))]
        write_table(out, header, ([float(x)] + [float(c[j]) for c in columns] for j, x in enumerate(grid)))
        return {'points': steps, 'models': models, 'out': out}
