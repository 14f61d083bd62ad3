"""Exhaustive search over deterministic stationary policies, for small instances."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from riskmdp.env import thread_cap
from riskmdp.errors import InstanceTooLargeError, MDPValidationError
from riskmdp.mdp import MDP, validate_mdp
from riskmdp.planner.bellman import evaluate_policy
from riskmdp.planner.types import OracleResult, PlannerConfig, Policy
from riskmdp.solver import check_budgets

logger = logging.getLogger(__name__)

MAX_POLICIES = 10**6
FEASIBILITY_TOL = 1e-9


def _evaluate_chunk(mdp: MDP, cfg: PlannerConfig, chunk: list[tuple[int, ...]]):
    rows = []
    for actions in chunk:
        J, D = evaluate_policy(mdp, Policy(actions=list(actions)), cfg.risk, cfg.fixed_point_tol)
        rows.append((J, D, actions))
    return rows


def brute_force_constrained_optimum(
    mdp: MDP,
    cfg: PlannerConfig,
    *,
    max_policies: int = MAX_POLICIES,
    workers: int | None = None,
) -> OracleResult:
    """Minimum-J policy among all deterministic policies with D^i <= β^i.

    Ties in J are broken by the lexicographically smallest action tuple, so
    the result does not depend on how the enumeration is split across threads.
    """
    report = validate_mdp(mdp)
    if not report.is_empty:
        raise MDPValidationError(report)
    beta = check_budgets(mdp, cfg.budgets)
    total = mdp.n_actions**mdp.n_states
    if total > max_policies:
        raise InstanceTooLargeError(
            f"{mdp.n_actions}^{mdp.n_states} = {total} policies exceeds the "
            f"enumeration limit of {max_policies}"
        )

    candidates = list(itertools.product(range(mdp.n_actions), repeat=mdp.n_states))
    workers = max(1, min(workers or thread_cap(), len(candidates)))
    chunks = [candidates[i::workers] for i in range(workers)]
    if workers == 1:
        evaluated = _evaluate_chunk(mdp, cfg, candidates)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(lambda chunk: _evaluate_chunk(mdp, cfg, chunk), chunks)
            evaluated = [row for part in parts for row in part]

    feasible = [
        row for row in evaluated if all(d <= b + FEASIBILITY_TOL for d, b in zip(row[1], beta))
    ]
    logger.info(
        "oracle enumerated %s policies, %s meet the budgets", len(evaluated), len(feasible)
    )
    if not feasible:
        return OracleResult(feasible=False, n_policies=len(evaluated), n_feasible=0)
    J, D, actions = min(feasible, key=lambda row: (row[0], row[2]))
    return OracleResult(
        feasible=True,
        policy=Policy(actions=list(actions)),
        value=J,
        constraint_values=D,
        n_policies=len(evaluated),
        n_feasible=len(feasible),
    )


def lagrangian_value(mdp: MDP, policy: Policy, lam, cfg: PlannerConfig) -> float:
    """L(π, λ) = J(π) + <λ, D(π) - β>."""
    beta = check_budgets(mdp, cfg.budgets)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    J, D = evaluate_policy(mdp, policy, cfg.risk, cfg.fixed_point_tol)
    return float(J + lam @ (np.asarray(D) - beta))
