"""Monte Carlo robustness evaluation on perturbed grid-worlds."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from riskmdp.env import thread_cap
from riskmdp.evaluation.simulate import default_max_steps, simulate
from riskmdp.evaluation.types import (
    EvaluationReport,
    InstanceMetadata,
    RunSummary,
    SampleStats,
)
from riskmdp.mdp import GridConfig, build_gridworld, cell_to_state, perturb_obstacles
from riskmdp.planner import Policy
from riskmdp.utils import dump_json

logger = logging.getLogger(__name__)


def run_seeds(seed: int, run: int) -> tuple[int, int]:
    """(perturbation seed, simulation seed) of one run, independent of scheduling."""
    perturb_seed, sim_seed = np.random.SeedSequence([seed, run]).generate_state(2)
    return int(perturb_seed), int(sim_seed)


def _one_run(
    grid: GridConfig,
    policy: Policy,
    run: int,
    perturb_prob: float,
    seed: int,
    discount: float,
    max_steps: int,
) -> RunSummary:
    perturb_seed, sim_seed = run_seeds(seed, run)
    realized = perturb_obstacles(grid, perturb_prob, perturb_seed)
    mdp = build_gridworld(realized, discount)
    # The vacated nominal cell still counts as a collision.
    hazards = set(mdp.hazards) | {cell_to_state(grid, cell) for cell in grid.obstacles}
    trajectory = simulate(mdp, policy, sim_seed, max_steps, hazards=hazards)
    return RunSummary.from_trajectory(run, trajectory)


def monte_carlo_report(
    grid: GridConfig,
    policy: Policy,
    runs: int,
    perturb_prob: float,
    seed: int,
    *,
    discount: float = 0.95,
    max_steps: int | None = None,
    metadata: InstanceMetadata | None = None,
    workers: int | None = None,
) -> EvaluationReport:
    """Simulate ``policy`` on ``runs`` independently perturbed copies of ``grid``.

    Every run moves each uncertain obstacle with probability ``perturb_prob``,
    rebuilds the MDP and simulates once. A collision is entering any cell that
    is an obstacle in the nominal or the perturbed map. Runs fan out over a
    thread pool; results are aggregated in run order, so a fixed seed
    reproduces the report exactly.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    max_steps = default_max_steps() if max_steps is None else max_steps
    workers = max(1, min(workers or thread_cap(), runs))
    logger.info(
        "evaluating %s runs on %s grid (perturb=%.3g, workers=%s)",
        runs,
        grid.size_label,
        perturb_prob,
        workers,
    )

    def job(run: int) -> RunSummary:
        return _one_run(grid, policy, run, perturb_prob, seed, discount, max_steps)

    if workers == 1:
        summaries = [job(run) for run in range(runs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(job, range(runs)))

    n_collided = sum(s.collided for s in summaries)
    n_truncated = sum(s.truncated for s in summaries)
    if n_truncated:
        logger.warning("%s of %s runs hit max_steps=%s", n_truncated, runs, max_steps)
    n_constraints = len(summaries[0].discounted_constraints)
    if metadata is None:
        metadata = InstanceMetadata(
            grid_size=grid.size_label,
            measure="-",
            n_uncertain=len(grid.uncertain_obstacles),
        )
    report = EvaluationReport(
        metadata=metadata,
        runs=runs,
        seed=seed,
        perturb_prob=perturb_prob,
        max_steps=max_steps,
        failure_rate=n_collided / runs,
        n_collided=n_collided,
        n_truncated=n_truncated,
        objective=SampleStats.from_samples([s.discounted_objective for s in summaries]),
        constraints=[
            SampleStats.from_samples([s.discounted_constraints[i] for s in summaries])
            for i in range(n_constraints)
        ],
        summaries=summaries,
    )
    logger.info("failure rate %.3f over %s runs", report.failure_rate, runs)
    return report


def write_report_json(report: EvaluationReport, path: str | Path) -> Path:
    return dump_json(report, path)


TABLE_COLUMNS = (
    "measure",
    "epsilon",
    "grid_size",
    "budget",
    "value_or_bound",
    "solve_time_s",
    "n_uncertain",
    "failure_rate",
    "manifest_hash",
)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def table_row(report: EvaluationReport) -> list[str]:
    meta = report.metadata
    value = meta.lower_bound if meta.lower_bound is not None else meta.objective_value
    return [
        _cell(meta.measure),
        _cell(meta.epsilon),
        _cell(meta.grid_size),
        ";".join(_cell(float(b)) for b in meta.budgets),
        _cell(value),
        _cell(meta.solve_time_s),
        _cell(meta.n_uncertain),
        _cell(float(report.failure_rate)),
        _cell(report.manifest_hash),
    ]


def write_table_csv(reports: EvaluationReport | list[EvaluationReport], path: str | Path) -> Path:
    """One results-table row per report (see ``TABLE_COLUMNS``); the last column ties it to its run."""
    if isinstance(reports, EvaluationReport):
        reports = [reports]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TABLE_COLUMNS)
        for report in reports:
            writer.writerow(table_row(report))
    return path
