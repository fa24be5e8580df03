"""
gen-toy command: the one-dimensional benchmark dataset.
"""

from typing import Any, Dict

from rbfprune.commands.base import Command
from rbfprune.core.training import make_toy_dataset
from rbfprune.utils.io import save_csv


class GenToyCommand(Command):
    """Write n samples of exp(-x^2) + 0.2 cos(4x), x ~ U(-4, 4), as CSV."""

    def execute(self, n: int, seed: int, out: str) -> Dict[str, Any]:
        dataset = make_toy_dataset(n, seed)
        save_csv(dataset, out)
        self.logger.info(f"Wrote {n} toy rows to {out}")
        return {'rows': n, 'seed': seed, 'out': out}
