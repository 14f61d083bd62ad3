"""Exception types raised by riskmdp.

Input problems subclass ``ValueError``; numerical outcomes of the solvers are
reported through status enums on their result objects instead.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from riskmdp.mdp.types import ValidationReport


class RiskMDPError(Exception):
    pass


class MDPValidationError(RiskMDPError, ValueError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__(f"MDP is not well-formed: {report.summary()}")


class GridConfigError(RiskMDPError, ValueError):
    pass


class RiskMeasureError(RiskMDPError, ValueError):
    pass


class SubgradientError(RiskMDPError, ArithmeticError):
    def __init__(self, state: int, action: int, detail: str = ""):
        self.state = state
        self.action = action
        message = f"non-finite linearization at (s={state}, a={action})"
        super().__init__(f"{message}: {detail}" if detail else message)


class PlannerConfigError(RiskMDPError, ValueError):
    pass


class NonConvergenceError(RiskMDPError, RuntimeError):
    def __init__(self, iterations: int, gap: float):
        self.iterations = iterations
        self.gap = gap
        super().__init__(
            f"fixed-point iteration did not converge in {iterations} steps "
            f"(last sup-norm step {gap:.3e})"
        )


class InstanceTooLargeError(RiskMDPError, ValueError):
    pass


class ManifestError(RiskMDPError, ValueError):
    pass
