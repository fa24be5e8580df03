"""
verify command: conformance suites against the reference oracles.
"""

from typing import Any, Dict, Optional

from rbfprune.commands.base import Command
from rbfprune.core.conformance import run_suite


class VerifyCommand(Command):
    """Run conformance suites and report their worst relative errors."""

    def execute(self, suite: str = 'all', seed: int = 0, cases: Optional[int] = None) -> Dict[str, Any]:
        with self.monitor.measure_operation('verify', {'suite': suite}):
            results = run_suite(suite, seed=seed, cases=cases)
        for result in results:
            self.monitor.log_metric(f'{result.suite}_max_error', result.max_error, unit='relative')
            level = self.logger.info if result.passed else self.logger.error
            level(f"{result.suite}: {result.cases} cases, max error {result.max_error:.3g}")
        return {
            'passed': all(r.passed for r in results),
            'suites': [r.to_dict() for r in results],
        }
