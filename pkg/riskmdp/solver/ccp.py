"""Penalty convex-concave procedure on a :class:`DCPProgram`.

Every iteration linearizes the tight g2 at the current iterate (ζ held at
its starting value), gives a penalized slack to each constraint violated at the
iterate and solves the resulting LP. Because the linearization is an inner
approximation, LP-feasible points satisfy the exact constraints and the
penalized objective cannot increase at a fixed τ.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from riskmdp.solver.dcp import DCPProgram, Linearization, linearize_g2
from riskmdp.solver.simplex import solve_lp
from riskmdp.solver.types import (
    CCPSettings,
    CCPSolution,
    CCPStatus,
    CCPTraceRow,
    LPBasis,
    LPStatus,
)

logger = logging.getLogger(__name__)

_SLACK_THRESHOLD = 1e-12


def _violation(residuals: np.ndarray) -> np.ndarray:
    return np.maximum(residuals, 0.0)


def _ray_uses_slacks(linear: Linearization, ray: np.ndarray | None) -> bool:
    if ray is None or linear.slack_rows.size == 0:
        return False
    slack = np.abs(ray[linear.program.n_vars :])
    return float(slack.max(initial=0.0)) > 1e-9 * max(1.0, float(np.abs(ray).max()))


def penalized_objective(program: DCPProgram, x: np.ndarray, tau: float) -> float:
    return program.objective(x) + tau * float(_violation(program.residuals(x)).sum())


def _start(program: DCPProgram, settings: CCPSettings) -> np.ndarray:
    if settings.initialization is None:
        return program.initial_point()
    x = np.asarray(settings.initialization, dtype=float)
    if x.size != program.n_vars:
        raise ValueError(
            f"initialization has {x.size} entries, program has {program.n_vars} variables"
        )
    x = x.copy()
    n, k = program.n_states, program.n_constraints
    x[n : n + k] = np.maximum(x[n : n + k], 0.0)
    if program.has_zeta:
        x[-1] = max(x[-1], program.zeta_lower, 1e-6)
    return x


def ccp_solve(program: DCPProgram, settings: CCPSettings | None = None) -> CCPSolution:
    """Run the penalty CCP from ``settings.initialization`` (default V = 0, λ = 0, ζ = 1).

    Steps whose true residual worsens by more than ``acceptance_tol`` are
    recomputed with a larger τ. Terminates when the objective changes by less
    than ``tolerance`` (relative) at a feasible iterate; a linear program
    terminates after one iteration.
    """
    settings = settings or CCPSettings()
    x = _start(program, settings)
    residuals = program.residuals(x)
    max_res = float(residuals.max(initial=0.0))
    tau = settings.tau0
    trace: list[CCPTraceRow] = []
    best: np.ndarray | None = x.copy() if max_res <= settings.feasibility_tol else None
    warm: LPBasis | None = None

    for iteration in range(1, settings.max_iterations + 1):
        slack_rows = np.flatnonzero(residuals > _SLACK_THRESHOLD)
        previous = penalized_objective(program, x, tau)
        while True:
            linear = linearize_g2(program, x, tau, slack_rows=slack_rows)
            solution = solve_lp(linear.lp, warm_basis=warm)
            if solution.status == LPStatus.UNBOUNDED and _ray_uses_slacks(linear, solution.ray):
                # The penalty is not yet exact: slacks are cheaper than the objective gain.
                if tau >= settings.tau_max:
                    return _finish(
                        program,
                        settings,
                        best,
                        x,
                        trace,
                        iteration,
                        CCPStatus.SOLVER_FAILURE,
                        f"penalized subproblem unbounded along its slacks at tau={tau:g}",
                    )
                tau = min(tau * settings.mu, settings.tau_max)
                previous = penalized_objective(program, x, tau)
                logger.debug("subproblem unbounded along slacks, tau=%.4g", tau)
                continue
            if solution.status == LPStatus.UNBOUNDED:
                ray = linear.program_point(solution.ray)
                logger.info("CCP subproblem unbounded at iteration %s", iteration)
                return CCPSolution(
                    status=CCPStatus.UNBOUNDED,
                    x=x,
                    objective=program.objective(x),
                    residuals=residuals,
                    feasible=max_res <= settings.feasibility_tol,
                    trace=trace,
                    iterations=iteration,
                    ray=ray,
                    message="linearized program unbounded; the Lagrangian dual diverges",
                )
            if solution.status != LPStatus.OPTIMAL:
                logger.warning(
                    "CCP subproblem failed at iteration %s: %s %s",
                    iteration,
                    solution.status.value,
                    solution.message,
                )
                return _finish(
                    program,
                    settings,
                    best,
                    x,
                    trace,
                    iteration,
                    CCPStatus.SOLVER_FAILURE,
                    f"LP subproblem {solution.status.value}: {solution.message}",
                )
            candidate = linear.program_point(solution.x)
            cand_res = program.residuals(candidate)
            cand_max = float(cand_res.max(initial=0.0))
            if cand_max <= max(max_res, 0.0) + settings.acceptance_tol or tau >= settings.tau_max:
                break
            tau = min(tau * settings.mu, settings.tau_max)
            previous = penalized_objective(program, x, tau)
            logger.debug("step rejected (residual %.3e -> %.3e), tau=%.4g", max_res, cand_max, tau)

        warm = solution.basis if slack_rows.size == 0 else None
        current = penalized_objective(program, candidate, tau)
        trace.append(
            CCPTraceRow(
                iteration=iteration,
                objective=program.objective(candidate),
                penalized_objective=current,
                previous_penalized=previous,
                max_residual=cand_max,
                tau=tau,
                lp_iterations=solution.iterations,
                slack_rows=int(slack_rows.size),
            )
        )
        logger.debug(
            "ccp iteration=%s penalized=%.10g max_residual=%.3e tau=%.4g",
            iteration,
            current,
            cand_max,
            tau,
        )

        x, residuals, max_res = candidate, cand_res, cand_max
        feasible = max_res <= settings.feasibility_tol
        if feasible and (best is None or program.objective(x) <= program.objective(best)):
            best = x.copy()
        if not feasible:
            tau = min(tau * settings.mu, settings.tau_max)

        if feasible and program.is_linear:
            return _finish(program, settings, best, x, trace, iteration, CCPStatus.CONVERGED)
        change = abs(previous - current)
        if feasible and change <= settings.tolerance * max(1.0, abs(current)):
            return _finish(program, settings, best, x, trace, iteration, CCPStatus.CONVERGED)

    return _finish(
        program, settings, best, x, trace, settings.max_iterations, CCPStatus.MAX_ITERATIONS
    )


def _finish(
    program: DCPProgram,
    settings: CCPSettings,
    best: np.ndarray | None,
    last: np.ndarray,
    trace: list[CCPTraceRow],
    iterations: int,
    status: CCPStatus,
    message: str = "",
) -> CCPSolution:
    if best is None:
        residuals = program.residuals(last)
        return CCPSolution(
            status=CCPStatus.NO_FEASIBLE_POINT,
            x=last,
            objective=program.objective(last),
            residuals=residuals,
            feasible=False,
            trace=trace,
            iterations=iterations,
            message=message or "slacks never vanished below the feasibility tolerance",
        )
    residuals = program.residuals(best)
    if status == CCPStatus.CONVERGED and not message:
        message = f"converged after {iterations} iteration(s)"
    elif status == CCPStatus.MAX_ITERATIONS and not message:
        message = f"iteration limit {settings.max_iterations} reached; best feasible iterate kept"
    return CCPSolution(
        status=status,
        x=best,
        objective=program.objective(best),
        residuals=residuals,
        feasible=float(residuals.max(initial=0.0)) <= settings.feasibility_tol,
        trace=trace,
        iterations=iterations,
        message=message,
    )


TRACE_COLUMNS = ("iteration", "penalized_objective", "max_residual", "tau", "manifest_hash")


def write_trace_csv(
    solution: CCPSolution | list[CCPTraceRow],
    path: str | Path,
    manifest_hash: str | None = None,
) -> Path:
    """CSV export of the CCP trace; every row repeats ``manifest_hash`` (empty if None)."""
    rows = solution.trace if isinstance(solution, CCPSolution) else solution
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.iteration,
                    f"{row.penalized_objective:.12g}",
                    f"{row.max_residual:.12g}",
                    f"{row.tau:.12g}",
                    manifest_hash or "",
                ]
            )
    return path
