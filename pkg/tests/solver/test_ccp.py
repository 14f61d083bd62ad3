from __future__ import annotations

import csv

import numpy as np
import pytest

from riskmdp.planner import PlannerConfig
from riskmdp.planner.program import assemble_program
from riskmdp.risk import RiskMeasure
from riskmdp.solver import (
    CCPSettings,
    CCPStatus,
    ccp_solve,
    penalized_objective,
    solve_expectation_lp,
    write_trace_csv,
)
from riskmdp.solver.ccp import TRACE_COLUMNS
from tests.conftest import make_mdp, random_mdp


def _program(mdp, risk, budget):
    return assemble_program(mdp, PlannerConfig(risk=risk, budgets=[budget]))


def _assert_monotone(solution):
    for row in solution.trace:
        slack = 1e-9 * max(1.0, abs(row.penalized_objective))
        assert row.penalized_objective <= row.previous_penalized + slack


def test_self_loop_value():
    mdp = make_mdp(np.ones((1, 1, 1)), [[1.0]], [[[0.0]]], [1.0], discount=0.95)
    for risk in (RiskMeasure.expectation(), RiskMeasure.cvar(0.2)):
        program = _program(mdp, risk, 1.0)
        solution = ccp_solve(program)
        assert solution.feasible
        assert program.lower_bound(solution.x) == pytest.approx(20.0, abs=1e-6)


@pytest.mark.parametrize("seed", range(50))
def test_expectation_agrees_with_exact_lp(seed):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(
        rng,
        n_states=int(rng.integers(2, 7)),
        n_actions=int(rng.integers(1, 4)),
        discount=0.9,
    )
    beta = float(rng.uniform(10.0, 40.0))
    exact = solve_expectation_lp(mdp, [beta])
    solution = ccp_solve(_program(mdp, RiskMeasure.expectation(), beta))
    if not exact.is_optimal:
        assert solution.status == CCPStatus.UNBOUNDED
        return
    assert solution.status == CCPStatus.CONVERGED
    assert solution.iterations == 1
    assert -solution.objective == pytest.approx(exact.objective, abs=1e-6)


@pytest.mark.parametrize("risk", [RiskMeasure.cvar(0.15), RiskMeasure.evar(0.15), RiskMeasure.cvar(0.5)], ids=lambda r: r.label)
def test_feasible_iterates_satisfy_exact_constraints(rng, risk):
    for _ in range(5):
        program = _program(random_mdp(rng), risk, 30.0)
        solution = ccp_solve(program)
        assert solution.feasible
        assert program.residuals(solution.x).max() <= 1e-6
        assert solution.max_residual <= 1e-6
        _assert_monotone(solution)


@pytest.mark.parametrize("tau0", [0.1, 1.0, 10.0])
def test_recovers_from_infeasible_start(rng, tau0):
    program = _program(random_mdp(rng), RiskMeasure.cvar(0.3), 30.0)
    start = program.pack(np.full(program.n_states, 80.0), np.zeros(1), 1.0)
    settings = CCPSettings(initialization=start.tolist(), tau0=tau0)
    solution = ccp_solve(program, settings)
    assert program.residuals(start).max() > 0.0
    assert solution.feasible
    assert solution.trace[0].slack_rows > 0
    _assert_monotone(solution)


def test_warm_start_from_own_solution(rng):
    program = _program(random_mdp(rng), RiskMeasure.evar(0.3), 30.0)
    cold = ccp_solve(program)
    warm = ccp_solve(program, CCPSettings(initialization=cold.x.tolist()))
    assert cold.feasible and warm.feasible
    assert warm.objective <= cold.objective + 1e-6


def test_unreachable_budget_reports_unbounded():
    mdp = make_mdp(np.ones((1, 1, 1)), [[1.0]], [[[3.0]]], [1.0], discount=0.95)
    solution = ccp_solve(_program(mdp, RiskMeasure.cvar(0.3), 30.0))
    assert solution.status == CCPStatus.UNBOUNDED
    assert solution.ray is not None
    assert solution.ray[1] > 0.0


def test_initialization_size_is_checked(two_state_mdp):
    program = _program(two_state_mdp, RiskMeasure.cvar(0.3), 10.0)
    with pytest.raises(ValueError):
        ccp_solve(program, CCPSettings(initialization=[0.0]))


def test_penalized_objective_counts_violations(two_state_mdp):
    program = _program(two_state_mdp, RiskMeasure.expectation(), 10.0)
    x = program.pack(np.array([100.0, 0.0]), np.zeros(1))
    violation = np.maximum(program.residuals(x), 0.0).sum()
    assert violation > 0.0
    assert penalized_objective(program, x, 2.0) == pytest.approx(program.objective(x) + 2.0 * violation)


def test_trace_csv(tmp_path, rng):
    solution = ccp_solve(_program(random_mdp(rng), RiskMeasure.cvar(0.3), 30.0))
    path = write_trace_csv(solution, tmp_path / "trace.csv", manifest_hash="feedface")
    with path.open(encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == len(solution.trace) + 1
    assert [int(r[0]) for r in rows[1:]] == list(range(1, len(solution.trace) + 1))
    assert {r[-1] for r in rows[1:]} == {"feedface"}
