"""
eval command.
"""

import math
from typing import Any, Dict

from rbfprune.commands.base import Command
from rbfprune.core.model import Dataset, forward_batch, mse_loss
from rbfprune.utils.io import load_csv_inputs, load_model, write_table


class EvalCommand(Command):
    """Predict every row of a CSV file."""

    def execute(self, model: str, data: str, out: str, has_header: bool = True,
                binary_to_pm1: bool = False, threads: int = 1) -> Dict[str, Any]:
        net = load_model(model)
        inputs, responses = load_csv_inputs(data, net.dim, has_header=has_header,
                                            binary_to_pm1=binary_to_pm1)
        predictions = forward_batch(net, inputs, threads=threads)

        if responses is None:
            write_table(out, ['row', 'prediction'],
                        ([i, float(p)] for i, p in enumerate(predictions)))
            return {'rows': len(predictions), 'out': out}

        write_table(out, ['row', 'prediction', 'response'],
                    ([i, float(p), float(y)] for i, (p, y) in enumerate(zip(predictions, responses))))
        rmse = math.sqrt(mse_loss(net, Dataset(inputs, responses), threads=threads))
        self.logger.info(f"RMSE {rmse:.6g} on {len(responses)} rows")
        return {'rows': len(predictions), 'rmse': rmse, 'out': out}
