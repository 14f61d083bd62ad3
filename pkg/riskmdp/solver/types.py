from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class LPStatus(str, Enum):
    """Outcome of a linear program solve."""

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


class CCPStatus(str, Enum):
    """Outcome of the convex-concave procedure."""

    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    NO_FEASIBLE_POINT = "no_feasible_point"
    UNBOUNDED = "unbounded"
    SOLVER_FAILURE = "solver_failure"


def _as_matrix(a, n: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, n))
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    return a


def _as_vector(b, m: int, fill: float = 0.0) -> np.ndarray:
    if b is None:
        return np.full(m, fill)
    return np.asarray(b, dtype=float).reshape(-1)


@dataclass
class LinearProgram:
    """minimize c @ x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper.

    ``lower`` defaults to 0 and ``upper`` to +inf; either may be infinite.
    """

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A_ub = _as_matrix(self.A_ub, n)
        self.A_eq = _as_matrix(self.A_eq, n)
        self.b_ub = _as_vector(self.b_ub, self.A_ub.shape[0])
        self.b_eq = _as_vector(self.b_eq, self.A_eq.shape[0])
        self.lower = _as_vector(self.lower, n, 0.0)
        self.upper = _as_vector(self.upper, n, np.inf)
        for name, a, b in (("ub", self.A_ub, self.b_ub), ("eq", self.A_eq, self.b_eq)):
            if a.shape[1] != n or a.shape[0] != b.size:
                raise ValueError(f"A_{name} {a.shape} incompatible with c ({n}) / b ({b.size})")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound above upper bound")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise ValueError("bounds must admit a finite value")
        for arr in (self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")

    @property
    def n_vars(self) -> int:
        return self.c.size

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)


@dataclass(frozen=True)
class LPResiduals:
    primal: float = 0.0
    dual: float = 0.0
    gap: float = 0.0
    complementarity: float = 0.0


@dataclass(frozen=True)
class LPBasis:
    """Final simplex basis, reusable as a warm start on a same-shaped program."""

    path: str
    columns: tuple[int, ...]
    shape: tuple[int, int]


@dataclass
class LPSolution:
    status: LPStatus
    x: np.ndarray | None = None
    objective: float = float("nan")
    ub_duals: np.ndarray | None = None
    eq_duals: np.ndarray | None = None
    # Unbounded: improving direction in x. Infeasible: Farkas multipliers on the rows.
    ray: np.ndarray | None = None
    residuals: LPResiduals = field(default_factory=LPResiduals)
    iterations: int = 0
    basis: LPBasis | None = None
    message: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status == LPStatus.OPTIMAL


class CCPSettings(BaseModel):
    """Penalty convex-concave procedure parameters."""

    max_iterations: int = Field(default=200, gt=0)
    tolerance: float = Field(default=1e-6, gt=0.0)
    tau0: float = Field(default=1.0, gt=0.0)
    mu: float = Field(default=1.5, gt=1.0)
    tau_max: float = Field(default=1e4, gt=0.0)
    feasibility_tol: float = Field(default=1e-6, gt=0.0)
    acceptance_tol: float = Field(default=1e-6, gt=0.0)
    initialization: list[float] | None = None

    @field_validator("initialization")
    @classmethod
    def _finite_start(cls, value: list[float] | None) -> list[float] | None:
        if value is not None and not np.all(np.isfinite(value)):
            raise ValueError("initialization must be finite")
        return value

    @model_validator(mode="after")
    def _tau_order(self) -> "CCPSettings":
        if self.tau_max < self.tau0:
            raise ValueError("tau_max must be at least tau0")
        return self


class CCPTraceRow(BaseModel):
    iteration: int
    objective: float
    penalized_objective: float
    previous_penalized: float
    max_residual: float
    tau: float
    lp_iterations: int = 0
    slack_rows: int = 0


@dataclass
class CCPSolution:
    status: CCPStatus
    x: np.ndarray
    objective: float
    residuals: np.ndarray
    feasible: bool
    trace: list[CCPTraceRow] = field(default_factory=list)
    iterations: int = 0
    ray: np.ndarray | None = None
    message: str = ""

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max(initial=0.0))
