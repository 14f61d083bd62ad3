from __future__ import annotations

from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, field_validator

from riskmdp.risk import RiskMeasure
from riskmdp.solver import CCPSettings, CCPTraceRow


class PlanStatus(str, Enum):
    """Planner outcome."""

    CERTIFIED = "certified"  # lower bound certified by a feasible Bellman-inequality point
    UNCERTIFIED = "uncertified"  # solver stopped without a feasible point
    INFEASIBLE = "infeasible"  # Lagrangian dual unbounded: no policy meets the budgets


class PlannerConfig(BaseModel):
    """Risk measure, budgets β and solver settings; γ comes from the MDP."""

    risk: RiskMeasure = Field(default_factory=RiskMeasure.expectation)
    budgets: list[float]
    solver: CCPSettings = Field(default_factory=CCPSettings)
    fixed_point_tol: float = Field(default=1e-8, gt=0.0)
    # Start the CCP from the expectation LP optimum when no initialization is given.
    start_from_expectation: bool = True

    @field_validator("budgets")
    @classmethod
    def _positive_budgets(cls, value: list[float]) -> list[float]:
        if any(not np.isfinite(b) or b <= 0.0 for b in value):
            raise ValueError(f"budgets must be positive, got {value}")
        return value


class Policy(BaseModel):
    """Deterministic stationary policy: ``actions[s]`` is the action taken in state s."""

    actions: list[int]

    @field_validator("actions")
    @classmethod
    def _non_negative(cls, value: list[int]) -> list[int]:
        if any(a < 0 for a in value):
            raise ValueError("actions must be non-negative indices")
        return value

    @classmethod
    def from_array(cls, actions) -> "Policy":
        return cls(actions=[int(a) for a in np.asarray(actions).reshape(-1)])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.actions, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, s: int) -> int:
        return self.actions[s]

    def check(self, n_states: int, n_actions: int) -> None:
        if len(self.actions) != n_states:
            raise ValueError(f"policy covers {len(self.actions)} states, MDP has {n_states}")
        if any(a >= n_actions for a in self.actions):
            raise ValueError(f"policy uses an action outside [0, {n_actions})")


class PlanDiagnostics(BaseModel):
    solver: str
    solver_status: str
    iterations: int = 0
    lp_iterations: int = 0
    max_residual: float = 0.0
    trace: list[CCPTraceRow] = Field(default_factory=list)
    lambda_ray: list[float] | None = None


class PlanResult(BaseModel):
    """Planner output.

    For EVaR the solver works in the scaled variables (Ṽ, λ̃, ζ).
    ``V_tilde``/``lambda_tilde``/``zeta_star`` are its raw solution, with ζ held
    at its starting value, and ``V_star = V_tilde / zeta_star``. The bound is
    ``(1/ζ*)(<κ0, Ṽ> - <λ̃, β>)``. ``zeta_star`` is unset for the other measures.
    """

    status: PlanStatus
    risk: RiskMeasure
    budgets: list[float]
    discount: float
    initial_distribution: list[float]
    V_star: list[float]
    lambda_star: list[float]
    zeta_star: float | None = None
    V_tilde: list[float] | None = None
    lambda_tilde: list[float] | None = None
    lower_bound: float | None = None
    policy: Policy
    objective_value: float | None = None
    constraint_values: list[float] = Field(default_factory=list)
    budget_violations: list[int] = Field(default_factory=list)
    solve_time_s: float = 0.0
    message: str = ""
    diagnostics: PlanDiagnostics

    @property
    def certified(self) -> bool:
        return self.status == PlanStatus.CERTIFIED

    def recompute_lower_bound(self) -> float:
        kappa0 = np.asarray(self.initial_distribution)
        beta = np.asarray(self.budgets)
        if self.V_tilde is not None and self.zeta_star:
            inner = kappa0 @ np.asarray(self.V_tilde) - beta @ np.asarray(self.lambda_tilde)
            return float(inner / self.zeta_star)
        return float(kappa0 @ np.asarray(self.V_star) - beta @ np.asarray(self.lambda_star))


class OracleResult(BaseModel):
    """Best deterministic stationary policy meeting the budgets, by enumeration."""

    feasible: bool
    policy: Policy | None = None
    value: float | None = None
    constraint_values: list[float] = Field(default_factory=list)
    n_policies: int = 0
    n_feasible: int = 0
