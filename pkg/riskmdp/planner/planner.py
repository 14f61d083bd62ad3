from __future__ import annotations

import logging
import time
from collections.abc import Sequence

import numpy as np

from riskmdp.mdp import MDP
from riskmdp.planner.bellman import evaluate_policy, extract_policy, risk_value_iteration
from riskmdp.planner.program import assemble_program
from riskmdp.planner.types import PlanDiagnostics, PlannerConfig, PlanResult, PlanStatus
from riskmdp.risk import RiskKind, RiskMeasure
from riskmdp.solver import (
    CCPSolution,
    CCPStatus,
    DCPProgram,
    LPStatus,
    ccp_solve,
    check_budgets,
    solve_expectation_lp,
)

logger = logging.getLogger(__name__)

BUDGET_TOL = 1e-6


def _start_candidates(mdp: MDP, cfg: PlannerConfig, previous: PlanResult | None):
    if previous is not None and previous.certified:
        if len(previous.V_star) != mdp.n_states:
            raise ValueError(
                f"warm start plan has {len(previous.V_star)} states, MDP has {mdp.n_states}"
            )
        yield previous.risk.label, previous.V_star, previous.lambda_star
    if cfg.start_from_expectation:
        lp = solve_expectation_lp(mdp, cfg.budgets)
        if lp.status == LPStatus.OPTIMAL:
            yield "expectation", lp.V, lp.lam


def _warm_start(
    mdp: MDP, cfg: PlannerConfig, program: DCPProgram, previous: PlanResult | None
) -> list[float] | None:
    """First feasible starting point for the CCP, or None to start from zero.

    A point feasible for a less risk-averse measure stays feasible for a more
    risk-averse one (E <= CVaR <= EVaR), so the CCP never ends below it.
    """
    for source, V, lam in _start_candidates(mdp, cfg, previous):
        x = program.pack(V, np.maximum(np.asarray(lam, dtype=float), 0.0), 1.0)
        if float(program.residuals(x).max(initial=0.0)) <= cfg.solver.feasibility_tol:
            logger.debug("CCP warm start from %s (bound %.10g)", source, program.lower_bound(x))
            return x.tolist()
        logger.info("warm start from %s is infeasible for %s", source, cfg.risk.label)
    return None


def _from_lp(mdp: MDP, cfg: PlannerConfig):
    result = solve_expectation_lp(mdp, cfg.budgets)
    n, k = mdp.n_states, mdp.n_constraints
    lp = result.lp
    diagnostics = PlanDiagnostics(
        solver="simplex",
        solver_status=lp.status.value,
        iterations=1,
        lp_iterations=lp.iterations,
        max_residual=lp.residuals.primal,
    )
    if result.status == LPStatus.OPTIMAL:
        return (
            PlanStatus.CERTIFIED, result.V, result.lam, None, result.objective, diagnostics, ""
        )
    V, lam = np.zeros(n), np.zeros(k)
    if result.status == LPStatus.UNBOUNDED:
        if lp.ray is not None:
            diagnostics.lambda_ray = [float(r) for r in lp.ray[n:]]
        return PlanStatus.INFEASIBLE, V, lam, None, None, diagnostics, (
            "Lagrangian dual is unbounded along λ: no policy meets the budgets"
        )
    message = f"LP {lp.status.value}: {lp.message}"
    return PlanStatus.UNCERTIFIED, V, lam, None, None, diagnostics, message


def _from_ccp(mdp: MDP, cfg: PlannerConfig, previous: PlanResult | None):
    program = assemble_program(mdp, cfg)
    settings = cfg.solver
    if settings.initialization is None:
        start = _warm_start(mdp, cfg, program, previous)
        if start is not None:
            settings = settings.model_copy(update={"initialization": start})
    solution: CCPSolution = ccp_solve(program, settings)
    V, lam, zeta = program.split(solution.x)
    zeta = zeta if program.has_zeta else None
    diagnostics = PlanDiagnostics(
        solver="ccp",
        solver_status=solution.status.value,
        iterations=solution.iterations,
        lp_iterations=sum(row.lp_iterations for row in solution.trace),
        max_residual=solution.max_residual,
        trace=solution.trace,
    )
    if solution.status == CCPStatus.UNBOUNDED:
        if solution.ray is not None:
            _, ray_lam, _ = program.split(solution.ray)
            diagnostics.lambda_ray = [float(r) for r in ray_lam]
        return PlanStatus.INFEASIBLE, V, lam, zeta, None, diagnostics, solution.message
    if not solution.feasible:
        return PlanStatus.UNCERTIFIED, V, lam, zeta, None, diagnostics, solution.message
    return (
        PlanStatus.CERTIFIED,
        V,
        lam,
        zeta,
        program.lower_bound(solution.x),
        diagnostics,
        solution.message,
    )


def plan(mdp: MDP, cfg: PlannerConfig, *, warm_start: PlanResult | None = None) -> PlanResult:
    """Solve the Bellman-inequality program for ``cfg.risk`` and extract the greedy policy.

    The expectation goes through the exact LP; CVaR and EVaR through the
    penalty CCP. The returned bound ``<κ0, V*> - <λ*, β>`` is certified only
    when the solver produced a feasible point. The extracted policy is
    re-evaluated under the same risk measure and budget violations are
    reported, not hidden.

    Unless ``cfg.solver.initialization`` is set, the CCP starts from the
    certified ``warm_start`` plan when it is feasible for ``cfg.risk``, else
    from the expectation LP optimum (``cfg.start_from_expectation``).
    """
    started = time.perf_counter()
    beta = check_budgets(mdp, cfg.budgets)
    if cfg.risk.is_linear:
        status, V, lam, zeta, bound, diagnostics, message = _from_lp(mdp, cfg)
    else:
        status, V, lam, zeta, bound, diagnostics, message = _from_ccp(mdp, cfg, warm_start)
    V = np.asarray(V, dtype=float)
    lam = np.maximum(np.asarray(lam, dtype=float), 0.0)
    zeta_star = V_tilde = lam_tilde = None
    if cfg.risk.kind == RiskKind.EVAR and zeta is not None:
        # The solve ran in (Ṽ, λ̃, ζ); V* = Ṽ/ζ*, λ* = λ̃/ζ*.
        zeta_star = zeta
        V_tilde, lam_tilde = V.tolist(), lam.tolist()
        V, lam = V / zeta, lam / zeta
        note = f"zeta held at {zeta:g} during the solve"
        message = f"{message}; {note}" if message else note

    policy = extract_policy(mdp, V, lam, cfg.risk)
    J, D = evaluate_policy(mdp, policy, cfg.risk, cfg.fixed_point_tol)
    violations = [
        i for i, (d, b) in enumerate(zip(D, beta)) if d > b + BUDGET_TOL * max(1.0, b)
    ]
    if violations:
        logger.warning(
            "extracted policy exceeds budget(s) %s: D=%s beta=%s",
            violations,
            [round(d, 6) for d in D],
            beta.tolist(),
        )

    elapsed = time.perf_counter() - started
    logger.info(
        "plan %s status=%s bound=%s J=%.6g time=%.3fs",
        cfg.risk.label,
        status.value,
        "n/a" if bound is None else f"{bound:.10g}",
        J,
        elapsed,
    )
    return PlanResult(
        status=status,
        risk=cfg.risk,
        budgets=beta.tolist(),
        discount=mdp.discount,
        initial_distribution=mdp.initial_distribution.tolist(),
        V_star=V.tolist(),
        lambda_star=lam.tolist(),
        zeta_star=zeta_star,
        V_tilde=V_tilde,
        lambda_tilde=lam_tilde,
        lower_bound=None if bound is None else float(bound),
        policy=policy,
        objective_value=J,
        constraint_values=D,
        budget_violations=violations,
        solve_time_s=elapsed,
        message=message,
        diagnostics=diagnostics,
    )


def plan_measures(mdp: MDP, risks: Sequence[RiskMeasure], cfg: PlannerConfig) -> list[PlanResult]:
    """Plan every measure in ``risks``, each warm-started from the last certified plan.

    Pass the measures from least to most risk-averse (E, CVaR_ε, EVaR_ε) and
    the certified bounds come out in the same order.
    """
    results: list[PlanResult] = []
    previous: PlanResult | None = None
    for risk in risks:
        result = plan(mdp, cfg.model_copy(update={"risk": risk}), warm_start=previous)
        results.append(result)
        if result.certified:
            previous = result
    return results

def lagrangian_dual_value(mdp: MDP, lam, cfg: PlannerConfig) -> float:
    """<κ0, V_λ> - <λ, β> with V_λ the risk value-iteration fixed point at λ.

    A lower bound on the constrained optimum for every λ >= 0, up to the
    fixed-point tolerance.
    """
    beta = check_budgets(mdp, cfg.budgets)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    V = risk_value_iteration(mdp, lam, cfg.risk, cfg.fixed_point_tol)
    return float(mdp.initial_distribution @ V - lam @ beta)
