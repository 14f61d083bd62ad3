from __future__ import annotations

import csv
import json
import math

import pytest

from riskmdp.evaluation import (
    EvaluationReport,
    InstanceMetadata,
    monte_carlo_report,
    run_seeds,
    simulate,
    write_report_json,
    write_table_csv,
)
from riskmdp.evaluation.monte_carlo import TABLE_COLUMNS
from riskmdp.mdp import (
    ACTION_LABELS,
    GridConfig,
    SlipModel,
    build_gridworld,
    generate_grid_config,
    perturb_obstacles,
)
from riskmdp.planner import PlannerConfig, Policy, plan_measures
from riskmdp.risk import RiskMeasure

WEST = ACTION_LABELS.index("W")


def _corridor(**kwargs) -> GridConfig:
    return GridConfig(
        width=3,
        height=kwargs.pop("height", 1),
        goal=(0, 0),
        start=(2, 0),
        slip_model=SlipModel.deterministic(),
        **kwargs,
    )


def _west(grid: GridConfig) -> Policy:
    return Policy(actions=[WEST] * grid.n_cells)


def test_free_corridor_never_fails():
    grid = _corridor()
    report = monte_carlo_report(grid, _west(grid), runs=10, perturb_prob=0.0, seed=0)
    assert report.failure_rate == 0.0
    assert report.n_truncated == 0
    assert report.objective.mean == pytest.approx(0.0)
    assert report.constraints[0].mean == pytest.approx(2.0 + 2.0 * 0.95)
    assert [s.run for s in report.summaries] == list(range(10))


def test_blocked_corridor_always_fails():
    grid = _corridor(obstacles=[(1, 0)])
    report = monte_carlo_report(grid, _west(grid), runs=5, perturb_prob=0.0, seed=0)
    assert report.failure_rate == 1.0
    assert all(s.first_collision_step == 0 for s in report.summaries)
    assert report.objective.mean == pytest.approx(0.95 * 10.0)


def test_collisions_follow_perturbed_obstacles():
    grid = _corridor(height=3, obstacles=[(1, 1)], uncertain_obstacles=[(1, 1)])
    report = monte_carlo_report(grid, _west(grid), runs=60, perturb_prob=1.0, seed=3)
    for summary in report.summaries:
        perturb_seed, _ = run_seeds(3, summary.run)
        moved = perturb_obstacles(grid, 1.0, perturb_seed)
        assert summary.collided == ((1, 0) in moved.obstacles)
    assert report.failure_rate == pytest.approx(report.n_collided / 60)


def test_single_run_matches_simulation():
    grid = _corridor(height=3, obstacles=[(1, 1)], uncertain_obstacles=[(1, 1)])
    report = monte_carlo_report(grid, _west(grid), runs=1, perturb_prob=0.5, seed=11)
    perturb_seed, sim_seed = run_seeds(11, 0)
    realized = perturb_obstacles(grid, 0.5, perturb_seed)
    trajectory = simulate(build_gridworld(realized), _west(grid), sim_seed)
    assert report.summaries[0].discounted_objective == pytest.approx(trajectory.discounted_objective)
    assert report.summaries[0].steps == trajectory.n_steps


def test_report_is_reproducible_across_workers():
    grid = _corridor(height=3, obstacles=[(1, 1)], uncertain_obstacles=[(1, 1)])
    grid = grid.model_copy(update={"slip_model": SlipModel()})
    policy = _west(grid)
    serial = monte_carlo_report(grid, policy, runs=40, perturb_prob=0.2, seed=5, workers=1)
    pooled = monte_carlo_report(grid, policy, runs=40, perturb_prob=0.2, seed=5, workers=4)
    assert serial == pooled


def test_rejects_zero_runs():
    grid = _corridor()
    with pytest.raises(ValueError):
        monte_carlo_report(grid, _west(grid), runs=0, perturb_prob=0.0, seed=0)


def test_results_table(tmp_path):
    grid = _corridor()
    metadata = InstanceMetadata(
        grid_size=grid.size_label,
        measure="CVaR(0.15)",
        epsilon=0.15,
        budgets=[50.0],
        lower_bound=1.25,
        solve_time_s=0.5,
    )
    report = monte_carlo_report(
        grid, _west(grid), runs=3, perturb_prob=0.0, seed=0, metadata=metadata
    )
    report.manifest_hash = "abc123"
    path = write_table_csv([report, report], tmp_path / "table.csv")
    with path.open(encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == TABLE_COLUMNS
    assert len(rows) == 3
    row = dict(zip(TABLE_COLUMNS, rows[1]))
    assert row["grid_size"] == "3x1"
    assert row["value_or_bound"] == "1.25"
    assert row["budget"] == "50"
    assert float(row["failure_rate"]) == 0.0
    assert row["manifest_hash"] == "abc123"


def test_report_json_reloads(tmp_path):
    grid = _corridor(obstacles=[(1, 0)])
    report = monte_carlo_report(grid, _west(grid), runs=4, perturb_prob=0.0, seed=2)
    path = write_report_json(report, tmp_path / "out" / "report.json")
    reloaded = EvaluationReport.model_validate(json.loads(path.read_text(encoding="utf-8")))
    assert reloaded.runs == 4
    assert reloaded.failure_rate == 1.0
    assert reloaded.objective.mean == pytest.approx(report.objective.mean)


@pytest.mark.slow
def test_failure_rate_estimator_matches_known_probability():
    # Path (2,0) -> (1,0) -> (0,0). The obstacle at (1,1) moves with probability
    # 0.6 to one of (1,0), (0,1), (2,1); only (1,0) is on the path.
    grid = _corridor(height=2, obstacles=[(1, 1)], uncertain_obstacles=[(1, 1)])
    runs, q = 10_000, 0.6 / 3.0
    report = monte_carlo_report(grid, _west(grid), runs=runs, perturb_prob=0.6, seed=2024)
    assert abs(report.failure_rate - q) <= 4.0 * math.sqrt(q * (1.0 - q) / runs)


@pytest.mark.slow
def test_risk_averse_policies_fail_less_often():
    grid = generate_grid_config(10, 10, 0.25, 3, seed=20230517)
    risks = [RiskMeasure.expectation(), RiskMeasure.cvar(0.15), RiskMeasure.evar(0.15)]
    plans = plan_measures(build_gridworld(grid), risks, PlannerConfig(budgets=[50.0]))
    slack = 0.03  # about one standard error at 100 runs
    ordered = 0
    for seed in range(10):
        expectation, cvar, evar = [
            monte_carlo_report(grid, p.policy, runs=100, perturb_prob=0.2, seed=seed).failure_rate
            for p in plans
        ]
        ordered += evar <= cvar + slack and cvar <= expectation + slack
    assert ordered >= 8
