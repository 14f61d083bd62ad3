from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field, model_validator


class Trajectory(BaseModel):
    """One simulated episode.

    ``states`` has one more entry than ``actions``: step t takes ``actions[t]``
    in ``states[t]``, pays ``objective_costs[t]`` / ``constraint_costs[t]`` and
    lands in ``states[t + 1]``; ``collisions[t]`` flags that landing cell.
    """

    states: list[int]
    actions: list[int] = Field(default_factory=list)
    objective_costs: list[float] = Field(default_factory=list)
    constraint_costs: list[list[float]] = Field(default_factory=list)
    collisions: list[bool] = Field(default_factory=list)
    discount: float
    discounted_objective: float = 0.0
    discounted_constraints: list[float] = Field(default_factory=list)
    truncated: bool = False

    @model_validator(mode="after")
    def _consistent_lengths(self) -> "Trajectory":
        steps = len(self.actions)
        if len(self.states) != steps + 1:
            raise ValueError(f"{len(self.states)} states for {steps} actions")
        for name in ("objective_costs", "constraint_costs", "collisions"):
            if len(getattr(self, name)) != steps:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {steps}")
        return self

    @property
    def n_steps(self) -> int:
        return len(self.actions)

    @property
    def collided(self) -> bool:
        return any(self.collisions)

    @property
    def first_collision(self) -> int | None:
        for t, hit in enumerate(self.collisions):
            if hit:
                return t
        return None


class RunSummary(BaseModel):
    run: int
    collided: bool
    first_collision_step: int | None = None
    steps: int
    truncated: bool
    discounted_objective: float
    discounted_constraints: list[float]

    @classmethod
    def from_trajectory(cls, run: int, trajectory: Trajectory) -> "RunSummary":
        return cls(
            run=run,
            collided=trajectory.collided,
            first_collision_step=trajectory.first_collision,
            steps=trajectory.n_steps,
            truncated=trajectory.truncated,
            discounted_objective=trajectory.discounted_objective,
            discounted_constraints=trajectory.discounted_constraints,
        )


class SampleStats(BaseModel):
    mean: float
    std: float
    stderr: float
    q05: float
    q50: float
    q95: float

    @classmethod
    def from_samples(cls, samples) -> "SampleStats":
        x = np.asarray(samples, dtype=float)
        if x.size == 0:
            raise ValueError("no samples")
        std = float(x.std(ddof=1)) if x.size > 1 else 0.0
        q05, q50, q95 = np.quantile(x, [0.05, 0.5, 0.95])
        return cls(
            mean=float(x.mean()),
            std=std,
            stderr=std / np.sqrt(x.size),
            q05=float(q05),
            q50=float(q50),
            q95=float(q95),
        )


class InstanceMetadata(BaseModel):
    """What was planned: one row of the results table."""

    grid_size: str
    measure: str
    epsilon: float | None = None
    budgets: list[float] = Field(default_factory=list)
    n_uncertain: int = 0
    plan_status: str | None = None
    lower_bound: float | None = None
    objective_value: float | None = None
    solve_time_s: float | None = None


class EvaluationReport(BaseModel):
    metadata: InstanceMetadata
    runs: int
    seed: int
    perturb_prob: float
    max_steps: int
    failure_rate: float = Field(ge=0.0, le=1.0)
    n_collided: int
    n_truncated: int
    objective: SampleStats
    constraints: list[SampleStats]
    summaries: list[RunSummary]
    manifest_hash: str | None = None

    @model_validator(mode="after")
    def _run_count(self) -> "EvaluationReport":
        if len(self.summaries) != self.runs:
            raise ValueError(f"{len(self.summaries)} run summaries for runs={self.runs}")
        return self
