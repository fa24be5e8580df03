"""
Custom exceptions with detailed context for rbfprune.

Every error carries a context dictionary and a recovery hint so the CLI can
emit a single machine-readable JSON line on stderr.
"""
from datetime import datetime
from typing import Dict, Any, Optional


class RbfPruneError(Exception):
    """Base exception with context and recovery hints."""

    exit_code = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None, recovery_hint: Optional[str] = None):
        super().__init__(message)
        self.context = context or {}
        self.recovery_hint = recovery_hint
        self.timestamp = datetime.now().isoformat()

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary for JSON serialization."""
        return {
            'error_type': self.__class__.__name__,
            'message': str(self),
            'context': self.context,
            'recovery_hint': self.recovery_hint,
            'timestamp': self.timestamp
        }


class InvalidArgumentError(RbfPruneError, ValueError):
    """A parameter is outside its valid range."""

    exit_code = 2

    def __init__(self, parameter: str, value: Any, reason: str):
        message = f"Invalid value for {parameter}: {value!r} ({reason})"
        context = {'parameter': parameter, 'value': repr(value), 'reason': reason}
        super().__init__(message, context, "Check the argument against its documented range.")


class DimensionMismatchError(RbfPruneError, ValueError):
    """Input dimension does not match the network or distribution."""

    exit_code = 2

    def __init__(self, what: str, expected: int, found: int):
        message = f"Dimension mismatch for {what}: expected {expected}, found {found}"
        context = {'what': what, 'expected': expected, 'found': found}
        recovery_hint = "Make sure model, data and distribution share the same input dimension D."
        super().__init__(message, context, recovery_hint)


class EmptyDatasetError(RbfPruneError, ValueError):
    """An operation needs at least one data row."""

    exit_code = 2

    def __init__(self, what: str = "dataset"):
        super().__init__(f"Empty {what}: at least one row is required",
                         {'what': what},
                         "Provide more rows or change the split sizes.")


class InvalidDistributionError(RbfPruneError, ValueError):
    """Input distribution parameters violate their constraints."""

    exit_code = 2

    def __init__(self, kind: str, issue: str):
        super().__init__(f"Invalid {kind} distribution: {issue}",
                         {'kind': kind, 'issue': issue},
                         "Check weights sum to 1, variances > 0, low < high and q in [0, 1].")


class NonFiniteValueError(RbfPruneError, ArithmeticError):
    """A loss, objective or parameter became NaN or infinite."""

    exit_code = 3

    def __init__(self, where: str, last_good: Optional[int] = None, value: Optional[float] = None):
        message = f"Non-finite value encountered in {where}"
        if last_good is not None:
            message += f" (last good step {last_good})"
        context = {'where': where, 'last_good': last_good, 'value': repr(value)}
        recovery_hint = "Lower the learning rate or rescale the inputs and responses."
        super().__init__(message, context, recovery_hint)


class QuadratureError(RbfPruneError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    exit_code = 3

    def __init__(self, achieved: float, requested: float, dimension: Optional[int] = None):
        message = f"Quadrature did not converge: achieved error {achieved:.3g}, requested {requested:.3g}"
        context = {'achieved': achieved, 'requested': requested, 'dimension': dimension}
        super().__init__(message, context, "Loosen the tolerance or narrow the distribution parameters.")


class EnumerationLimitError(RbfPruneError, ValueError):
    """Exhaustive enumeration was asked for too many dimensions."""

    exit_code = 2

    def __init__(self, dim: int, limit: int):
        super().__init__(f"Refusing to enumerate 2^{dim} outcomes (limit D <= {limit})",
                         {'dim': dim, 'limit': limit},
                         "Use the Monte Carlo oracle for large D.")


class DataFormatError(RbfPruneError, ValueError):
    """A CSV file could not be parsed."""

    exit_code = 2

    def __init__(self, path: str, issue: str, line_no: Optional[int] = None, column: Optional[int] = None):
        message = f"{path}"
        if line_no is not None:
            message += f":{line_no}"
        message += f": {issue}"
        context = {'path': path, 'issue': issue, 'line_no': line_no, 'column': column}
        super().__init__(message, context, "Fix the offending row or the loader options.")


class ModelFormatError(RbfPruneError, ValueError):
    """A model file is malformed or has an unknown schema version."""

    exit_code = 2

    def __init__(self, path: str, issue: str, schema_version: Any = None):
        super().__init__(f"Invalid model file {path}: {issue}",
                         {'path': path, 'issue': issue, 'schema_version': schema_version},
                         "Regenerate the model with this version of rbfprune.")


class ConfigError(RbfPruneError, ValueError):
    """Run configuration is malformed."""

    exit_code = 2

    def __init__(self, issue: str, section: Optional[str] = None, keys: Optional[list] = None):
        message = f"Invalid configuration: {issue}"
        context = {'section': section, 'keys': keys, 'issue': issue}
        super().__init__(message, context, "Check the config against the documented sections and keys.")


class ConformanceError(RbfPruneError):
    """A conformance suite exceeded its tolerance."""

    exit_code = 4

    def __init__(self, suite: str, max_error: float, tolerance: float):
        super().__init__(f"Suite {suite} failed: max relative error {max_error:.3g} > {tolerance:.3g}",
                         {'suite': suite, 'max_error': max_error, 'tolerance': tolerance},
                         "Run with --debug to see the failing case parameters.")
