from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from riskmdp.errors import MDPValidationError, PlannerConfigError
from riskmdp.mdp import MDP, validate_mdp
from riskmdp.solver.simplex import solve_lp
from riskmdp.solver.types import LinearProgram, LPSolution, LPStatus

logger = logging.getLogger(__name__)


@dataclass
class ExpectationLPResult:
    status: LPStatus
    V: np.ndarray | None
    lam: np.ndarray | None
    objective: float
    lp: LPSolution

    @property
    def is_optimal(self) -> bool:
        return self.status == LPStatus.OPTIMAL


def check_budgets(mdp: MDP, budgets) -> np.ndarray:
    beta = np.asarray(budgets, dtype=float).reshape(-1)
    if beta.size != mdp.n_constraints:
        raise PlannerConfigError(
            f"{beta.size} budget(s) given for {mdp.n_constraints} constraint cost(s)"
        )
    if np.any(~np.isfinite(beta)) or np.any(beta <= 0.0):
        raise PlannerConfigError(f"budgets must be positive and finite, got {beta.tolist()}")
    return beta


def expectation_lp(mdp: MDP, budgets) -> LinearProgram:
    """Bellman-inequality LP for the expectation measure.

    max <κ0, V> - <λ, β>  s.t.  V(s) <= c(s, a) + <λ, d(s, a)> + γ Σ T(s'|s, a) V(s'),  λ >= 0
    """
    beta = check_budgets(mdp, budgets)
    n, m, k = mdp.n_states, mdp.n_actions, mdp.n_constraints
    A_V = np.repeat(np.eye(n), m, axis=0) - mdp.discount * mdp.transition.reshape(n * m, n)
    A_lam = -mdp.constraint_costs.reshape(k, n * m).T
    return LinearProgram(
        c=np.concatenate([-mdp.initial_distribution, beta]),
        A_ub=np.hstack([A_V, A_lam]),
        b_ub=mdp.objective_cost.reshape(-1),
        lower=np.concatenate([np.full(n, -np.inf), np.zeros(k)]),
    )


def solve_expectation_lp(mdp: MDP, budgets) -> ExpectationLPResult:
    """Exact optimum of the Bellman-inequality program with σ = conditional expectation.

    An unbounded LP means the Lagrangian dual diverges: no policy meets the budgets.
    """
    report = validate_mdp(mdp)
    if not report.is_empty:
        raise MDPValidationError(report)
    lp = expectation_lp(mdp, budgets)
    solution = solve_lp(lp)
    if solution.status != LPStatus.OPTIMAL:
        logger.warning("expectation LP finished with status %s", solution.status.value)
        return ExpectationLPResult(solution.status, None, None, float("nan"), solution)
    n = mdp.n_states
    return ExpectationLPResult(
        status=solution.status,
        V=solution.x[:n],
        lam=solution.x[n:],
        objective=-solution.objective,
        lp=solution,
    )
