#!/usr/bin/env python3
"""
rbfprune - train RBF networks and prune them in closed form

Trains Gaussian radial basis function networks on CSV data and fits small
networks to large ones by minimizing the exact expected squared difference
under a Gaussian-mixture, uniform or +1/-1 Bernoulli input distribution.

Usage:
    rbfprune gen-toy --n 1000 --seed 7 --out toy.csv
    rbfprune train --data toy.csv --centroids 100 --model-out large.json
    rbfprune prune --model large.json --centroids 3 --dist 'uniform(-4,4)' --model-out small.json
    rbfprune verify --suite bernoulli
"""

import argparse
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

from rbfprune import __version__
from rbfprune.commands.data import GenToyCommand
from rbfprune.commands.evaluate import EvalCommand
from rbfprune.commands.export import CurveCommand, ExportCentroidsCommand
from rbfprune.commands.prune import PruneCommand
from rbfprune.commands.train import BenchmarkCommand, TrainCommand
from rbfprune.commands.verify import VerifyCommand
from rbfprune.core.conformance import Suite
from rbfprune.core.exceptions import ConformanceError, RbfPruneError
from rbfprune.core.monitoring import RunMonitor
from rbfprune.utils.config import load_run_config
from rbfprune.utils.environment import get_system_info
from rbfprune.utils.logging import get_logger, setup_logging
from rbfprune.utils.paths import validate_input_file, validate_output_file

# exit code for command-line usage errors, shared with argparse
EXIT_USAGE = 2

# Per command: path flags a run config's paths section may fill, and those that must end up set.
CONFIG_PATHS = {
    'train': (('data', 'model_out', 'report_out'), ('data', 'model_out')),
    'prune': (('model', 'model_out', 'report_out'), ('model', 'model_out')),
    'benchmark': (('data', 'out'), ('data',)),
}


def _response_column(value: str):
    try:
        return int(value)
    except ValueError:
        return value


def _global_options() -> argparse.ArgumentParser:
    """Flags every subcommand accepts."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='Seed of every random stream (overrides the config)')
    common.add_argument('--threads', type=int, help='Worker threads (results do not depend on it)')
    common.add_argument('--deterministic', action=argparse.BooleanOptionalAction, default=None,
                        help='Record the run as deterministic (default: config value, true)')
    common.add_argument('--verbose', '-v', action='store_true', help='Enable verbose logging')
    common.add_argument('--debug', action='store_true', help='Enable debug logging')
    common.add_argument('--json-logs', action='store_true', help='Write log records as JSON lines')
    common.add_argument('--metrics-out', metavar='FILE', help='Write collected run metrics as JSON')
    return common


def _loader_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--no-header', dest='has_header', action='store_false',
                        help='The CSV file has no header line')
    parser.add_argument('--response-column', type=_response_column, default=-1,
                        help='Response column index or name (default: last)')
    parser.add_argument('--binary-to-pm1', action='store_true',
                        help='Map feature columns with only 0/1 values to -1/+1')


def _train_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--centroids', dest='num_centroids', type=int, help='Number of centroids K')
    parser.add_argument('--batch-size', type=int)
    parser.add_argument('--weight-decay', type=float)
    parser.add_argument('--lr-start', type=float)
    parser.add_argument('--lr-floor', type=float)
    parser.add_argument('--patience', type=int)
    parser.add_argument('--grace', type=int)
    parser.add_argument('--max-epochs', type=int)


def create_parser() -> argparse.ArgumentParser:
    """Create the command-line argument parser."""
    parser = argparse.ArgumentParser(
        prog='rbfprune',
        description='Train RBF networks and prune them under an input distribution',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  rbfprune gen-toy --n 1000 --seed 7 --out toy.csv
  rbfprune train --data toy.csv --centroids 100 --model-out large.json --report-out train.jsonl
  rbfprune prune --model large.json --centroids 3 --dist std_normal --model-out small.json
  rbfprune curve --model large.json --model small.json --from -4 --to 4 --steps 401 --out curve.csv
  rbfprune verify --suite all --seed 0
        """
    )
    parser.add_argument('--version', action='store_true', help='Show version information')
    common = _global_options()
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')

    gen = sub.add_parser('gen-toy', parents=[common], help='Write the 1-D toy dataset')
    gen.add_argument('--n', type=int, required=True, help='Number of rows')
    gen.add_argument('--out', required=True, metavar='FILE')

    tr = sub.add_parser('train', parents=[common], help='Train a network')
    tr.add_argument('--data', metavar='FILE', help='Training CSV (default: paths.data in --config)')
    tr.add_argument('--config', metavar='FILE', help='Run config (JSON)')
    tr.add_argument('--model-out', metavar='FILE', help='Model file to write (default: paths.model_out)')
    tr.add_argument('--report-out', metavar='FILE', help='Per-epoch report (JSON lines)')
    _train_options(tr)
    _loader_options(tr)

    pr = sub.add_parser('prune', parents=[common], help='Prune a trained network')
    pr.add_argument('--model', metavar='FILE', help='Large model file (default: paths.model in --config)')
    pr.add_argument('--config', metavar='FILE', help='Run config (JSON)')
    pr.add_argument('--dist', help="std_normal, uniform(a,b) or bernoulli(q)")
    pr.add_argument('--model-out', metavar='FILE', help='Model file to write (default: paths.model_out)')
    pr.add_argument('--report-out', metavar='FILE', help='Per-restart report (JSON lines)')
    pr.add_argument('--centroids', dest='target_centroids', type=int, help='Number of centroids M')
    pr.add_argument('--restarts', type=int)
    pr.add_argument('--lr-start', type=float)
    pr.add_argument('--lr-floor', type=float)
    pr.add_argument('--patience', type=int)
    pr.add_argument('--grace', type=int)
    pr.add_argument('--max-iterations', type=int)
    pr.add_argument('--history', action='store_true', help='Include every iteration in the report')

    ev = sub.add_parser('eval', parents=[common], help='Predict a CSV file')
    ev.add_argument('--model', required=True, metavar='FILE')
    ev.add_argument('--data', required=True, metavar='FILE')
    ev.add_argument('--out', required=True, metavar='FILE')
    ev.add_argument('--no-header', dest='has_header', action='store_false')
    ev.add_argument('--binary-to-pm1', action='store_true')

    ex = sub.add_parser('export-centroids', parents=[common], help='Write centroids as CSV')
    ex.add_argument('--model', required=True, metavar='FILE')
    ex.add_argument('--out', required=True, metavar='FILE')
    ex.add_argument('--profile-out', metavar='FILE', help='Per-feature centroid magnitude summary')
    ex.add_argument('--clip', type=float, default=2.0)

    cu = sub.add_parser('curve', parents=[common], help='Sweep D = 1 models over an interval')
    cu.add_argument('--model', dest='models', action='append', required=True, metavar='FILE')
    cu.add_argument('--from', dest='start', type=float, required=True)
    cu.add_argument('--to', dest='stop', type=float, required=True)
    cu.add_argument('--steps', type=int, default=401)
    cu.add_argument('--out', required=True, metavar='FILE')

    ve = sub.add_parser('verify', parents=[common], help='Run conformance suites')
    ve.add_argument('--suite', choices=[s.value for s in Suite], default=Suite.ALL.value)
    ve.add_argument('--cases', type=int, help='Cases per suite (default: suite size)')

    be = sub.add_parser('benchmark', parents=[common], help='Repeated random-split evaluation')
    be.add_argument('--data', metavar='FILE', help='CSV file (default: paths.data in --config)')
    be.add_argument('--config', metavar='FILE', help='Run config (JSON)')
    be.add_argument('--repeats', type=int, default=10)
    be.add_argument('--out', metavar='FILE', help='Per-repeat report (JSON lines)')
    _train_options(be)
    _loader_options(be)

    return parser


def apply_config_paths(args: argparse.Namespace) -> List[str]:
    """
    Fill path flags left unset from the paths section of --config.

    Flags win over the file. Returns one usage error per required path that
    neither provides.

    Raises:
        ConfigError: the config file is not a valid run config
    """
    if args.command not in CONFIG_PATHS:
        return []
    settable, required = CONFIG_PATHS[args.command]
    if args.config is not None and validate_input_file(args.config) is None:
        paths = load_run_config(args.config).paths
        for name in settable:
            if getattr(args, name) is None and name in paths:
                setattr(args, name, paths[name])
    return [f"--{name.replace('_', '-')} is required (flag or paths.{name} in --config)"
            for name in required if getattr(args, name) is None]


def validate_arguments(args: argparse.Namespace) -> List[str]:
    """Check files and simple ranges before any work starts."""
    errors = []

    for name in ('data', 'model', 'config'):
        path = getattr(args, name, None)
        if path is not None:
            problem = validate_input_file(path)
            if problem:
                errors.append(f"--{name}: {problem}")
    for path in getattr(args, 'models', None) or []:
        problem = validate_input_file(path)
        if problem:
            errors.append(f"--model: {problem}")

    for name in ('out', 'model_out', 'report_out', 'profile_out', 'metrics_out'):
        path = getattr(args, name, None)
        if path is not None:
            problem = validate_output_file(path)
            if problem:
                errors.append(f"--{name.replace('_', '-')}: {problem}")

    if args.threads is not None and args.threads < 1:
        errors.append("--threads must be >= 1")
    if args.command == 'gen-toy' and args.n < 1:
        errors.append("--n must be >= 1")
    if args.command == 'benchmark' and args.repeats < 1:
        errors.append("--repeats must be >= 1")
    if args.command == 'curve':
        if args.steps < 2:
            errors.append("--steps must be >= 2")
        if not args.start < args.stop:
            errors.append("--from must be smaller than --to")

    return errors


def _common_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {'seed': args.seed, 'threads': args.threads, 'deterministic': args.deterministic}


def _train_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        **_common_overrides(args),
        'num_centroids': args.num_centroids, 'batch_size': args.batch_size,
        'weight_decay': args.weight_decay, 'lr_start': args.lr_start, 'lr_floor': args.lr_floor,
        'patience': args.patience, 'grace': args.grace, 'max_epochs': args.max_epochs,
    }


def _run_gen_toy(args, monitor):
    return GenToyCommand(monitor).execute(n=args.n, seed=args.seed or 0, out=args.out)


def _run_train(args, monitor):
    return TrainCommand(monitor).execute(
        data=args.data, model_out=args.model_out, report_out=args.report_out,
        config_path=args.config, has_header=args.has_header,
        response_column=args.response_column, binary_to_pm1=args.binary_to_pm1,
        **_train_overrides(args))


def _run_prune(args, monitor):
    return PruneCommand(monitor).execute(
        model=args.model, model_out=args.model_out, report_out=args.report_out,
        config_path=args.config, dist=args.dist, history=args.history,
        **_common_overrides(args),
        target_centroids=args.target_centroids, restarts=args.restarts,
        lr_start=args.lr_start, lr_floor=args.lr_floor, patience=args.patience,
        grace=args.grace, max_iterations=args.max_iterations)


def _run_eval(args, monitor):
    return EvalCommand(monitor).execute(model=args.model, data=args.data, out=args.out,
                                        has_header=args.has_header, binary_to_pm1=args.binary_to_pm1,
                                        threads=args.threads or 1)


def _run_export(args, monitor):
    return ExportCentroidsCommand(monitor).execute(model=args.model, out=args.out,
                                                   profile_out=args.profile_out, clip=args.clip)


def _run_curve(args, monitor):
    return CurveCommand(monitor).execute(models=args.models, start=args.start, stop=args.stop,
                                         steps=args.steps, out=args.out)


def _run_verify(args, monitor):
    result = VerifyCommand(monitor).execute(suite=args.suite, seed=args.seed or 0, cases=args.cases)
    print(json.dumps(result, indent=2))
    for suite in result['suites']:
        if not suite['passed']:
            raise ConformanceError(suite['suite'], suite['max_error'], suite['tolerance'])
    return None


def _run_benchmark(args, monitor):
    return BenchmarkCommand(monitor).execute(
        data=args.data, repeats=args.repeats, out=args.out, config_path=args.config,
        has_header=args.has_header, response_column=args.response_column,
        binary_to_pm1=args.binary_to_pm1, **_train_overrides(args))


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunMonitor], Optional[Dict[str, Any]]]] = {
    'gen-toy': _run_gen_toy,
    'train': _run_train,
    'prune': _run_prune,
    'eval': _run_eval,
    'export-centroids': _run_export,
    'curve': _run_curve,
    'verify': _run_verify,
    'benchmark': _run_benchmark,
}


def _emit_error(payload: Dict[str, Any]) -> None:
    sys.stderr.write(json.dumps(payload, default=str) + '\n')


def _export_metrics(monitor: RunMonitor, path: str, logger: logging.Logger) -> None:
    try:
        monitor.export_metrics(path)
    except OSError as e:
        logger.error(f"Cannot write metrics to {path}: {e.strerror}")


def main() -> int:
    """Main entry point for the rbfprune CLI."""
    parser = create_parser()
    args = parser.parse_args()

    if args.version:
        print(json.dumps({'rbfprune_version': __version__, 'system_info': get_system_info()}, indent=2))
        return 0
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    log_level = logging.DEBUG if args.debug else (logging.INFO if args.verbose else logging.WARNING)
    setup_logging(log_level, json_format=args.json_logs)
    logger = get_logger(__name__)

    try:
        validation_errors = apply_config_paths(args) + validate_arguments(args)
    except RbfPruneError as e:
        logger.error(str(e))
        _emit_error(e.to_dict())
        return e.exit_code
    if validation_errors:
        logger.error("Argument validation failed:")
        for error in validation_errors:
            logger.error(f"  - {error}")
        _emit_error({'error_type': 'UsageError', 'message': '; '.join(validation_errors)})
        return EXIT_USAGE

    monitor = RunMonitor()
    try:
        result = COMMANDS[args.command](args, monitor)
        if result is not None:
            print(json.dumps(result, indent=2, default=str))
        return 0

    except RbfPruneError as e:
        logger.error(str(e))
        _emit_error(e.to_dict())
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return 130  # Standard exit code for SIGINT
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        if args.debug:
            import traceback
            logger.error(traceback.format_exc())
        _emit_error({'error_type': type(e).__name__, 'message': str(e)})
        return 1
    finally:
        if args.metrics_out:
            _export_metrics(monitor, args.metrics_out, logger)


if __name__ == '__main__':
    sys.exit(main())
