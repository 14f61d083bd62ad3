from riskmdp.solver.ccp import ccp_solve, penalized_objective, write_trace_csv
from riskmdp.solver.dcp import DCPProgram, Linearization, Tangent, linearize_g2
from riskmdp.solver.expectation import (
    ExpectationLPResult,
    check_budgets,
    expectation_lp,
    solve_expectation_lp,
)
from riskmdp.solver.simplex import lp_residuals, solve_lp
from riskmdp.solver.types import (
    CCPSettings,
    CCPSolution,
    CCPStatus,
    CCPTraceRow,
    LinearProgram,
    LPBasis,
    LPResiduals,
    LPSolution,
    LPStatus,
)

__all__ = [
    "CCPSettings",
    "CCPSolution",
    "CCPStatus",
    "CCPTraceRow",
    "DCPProgram",
    "ExpectationLPResult",
    "LPBasis",
    "LPResiduals",
    "LPSolution",
    "LPStatus",
    "LinearProgram",
    "Linearization",
    "Tangent",
    "ccp_solve",
    "check_budgets",
    "expectation_lp",
    "linearize_g2",
    "lp_residuals",
    "penalized_objective",
    "solve_expectation_lp",
    "solve_lp",
    "write_trace_csv",
]
