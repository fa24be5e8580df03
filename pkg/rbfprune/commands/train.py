"""
train and benchmark commands.
"""

import dataclasses
import math
from typing import Any, Dict, Optional, Union

from rbfprune.commands.base import Command, file_sha256
from rbfprune.core.model import mse_loss
from rbfprune.core.training import repeated_split_evaluation, split_dataset, train
from rbfprune.utils.config import build_train_config, load_run_config
from rbfprune.utils.io import load_csv, save_model, write_report


class TrainCommand(Command):
    """Train an RBF network on a CSV dataset."""

    def execute(self, data: str, model_out: str, report_out: Optional[str] = None,
                config_path: Optional[str] = None, has_header: bool = True,
                response_column: Union[int, str] = -1, binary_to_pm1: bool = False,
                **overrides) -> Dict[str, Any]:
        """
        Split, train, and write the best-validation network.

        Args:
            data: CSV dataset
            model_out: Model file to write
            report_out: Optional line-delimited JSON report (one line per epoch)
            config_path: Optional run config
            has_header, response_column, binary_to_pm1: CSV loader options
            **overrides: TrainConfig fields given on the command line

        Returns:
            Summary with validation and (if a test split exists) test metrics
        """
        run_config = load_run_config(config_path)
        config = build_train_config(run_config, **overrides)
        sizes = run_config.split_sizes()
        dataset = load_csv(data, has_header=has_header, response_column=response_column,
                           binary_to_pm1=binary_to_pm1)
        train_part, val_part, test_part = split_dataset(dataset, sizes, config.seed)

        with self.monitor.measure_operation('train', {'num_centroids': config.num_centroids}):
            net, report = train(train_part, val_part, config)

        metrics: Dict[str, Any] = {
            'final_validation_mse': report.final_validation_mse,
            'best_epoch': report.best_epoch,
            'epochs': report.epochs,
            'stop_reason': report.stop_reason.value,
            'train_rows': len(train_part),
            'validation_rows': len(val_part),
            'test_rows': len(test_part),
        }
        if len(test_part):
            metrics['test_rmse'] = math.sqrt(mse_loss(net, test_part, threads=config.threads))
        self.monitor.log_metric('final_validation_mse', report.final_validation_mse, unit='mse')

        resolved = {
            'command': 'train',
            'train': dataclasses.asdict(config),
            'split': list(sizes),
            'data_sha256': file_sha256(data),
            'loader': {'has_header': has_header, 'response_column': response_column,
                       'binary_to_pm1': binary_to_pm1},
        }
        save_model(net, model_out, self.provenance(resolved, config.seed, metrics))
        if report_out:
            records = ({'type': 'epoch', **record.to_dict()} for record in report.records)
            write_report(report_out, records, {**metrics, **self.run_stamp(report.wall_time)})
        return {'model_out': model_out, **metrics}


class BenchmarkCommand(Command):
    """Repeated random train/validation/test splits of one dataset."""

    def execute(self, data: str, repeats: int, out: Optional[str] = None,
                config_path: Optional[str] = None, has_header: bool = True,
                response_column: Union[int, str] = -1, binary_to_pm1: bool = False,
                **overrides) -> Dict[str, Any]:
        run_config = load_run_config(config_path)
        config = build_train_config(run_config, **overrides)
        sizes = run_config.split_sizes()
        dataset = load_csv(data, has_header=has_header, response_column=response_column,
                           binary_to_pm1=binary_to_pm1)

        with self.monitor.measure_operation('benchmark', {'repeats': repeats}):
            result = repeated_split_evaluation(dataset, config, repeats, sizes, config.seed)

        summary = result.summary()
        if out:
            records = ({'type': 'repeat', 'repeat': i, 'test_rmse': rmse, **report.summary()}
                       for i, (rmse, report) in enumerate(zip(result.test_rmse, result.reports)))
            write_report(out, records, {**summary, **self.run_stamp(sum(r.wall_time for r in result.reports))})
        return summary
