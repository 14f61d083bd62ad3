from __future__ import annotations

import numpy as np

from riskmdp.errors import MDPValidationError, PlannerConfigError
from riskmdp.mdp import MDP, row_support, validate_mdp
from riskmdp.planner.types import PlannerConfig
from riskmdp.risk import RiskKind
from riskmdp.solver import DCPProgram, check_budgets


def assemble_program(mdp: MDP, cfg: PlannerConfig) -> DCPProgram:
    """Bellman-inequality DC program of ``mdp`` under ``cfg.risk``.

    One constraint per (s, a) in row order ``s * A + a``. CVaR and EVaR add a
    single ζ variable; the EVaR program is written in the scaled variables
    (Ṽ, λ̃, ζ) with g1 = ζc + <λ̃, d>.
    """
    report = validate_mdp(mdp)
    if not report.is_empty:
        raise MDPValidationError(report)
    if cfg.risk.kind not in (RiskKind.EXPECTATION, RiskKind.CVAR, RiskKind.EVAR):
        raise PlannerConfigError(f"unsupported risk measure {cfg.risk.kind!r}")
    beta = check_budgets(mdp, cfg.budgets)

    n, m, k = mdp.n_states, mdp.n_actions, mdp.n_constraints
    support, probs = row_support(mdp)
    return DCPProgram(
        risk=cfg.risk,
        discount=mdp.discount,
        kappa0=mdp.initial_distribution,
        budgets=beta,
        row_state=np.repeat(np.arange(n), m),
        row_action=np.tile(np.arange(m), n),
        cost=mdp.objective_cost.reshape(-1),
        constraint_cost=mdp.constraint_costs.reshape(k, n * m).T,
        support=support,
        probs=probs,
    )
