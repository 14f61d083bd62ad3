"""MDP, distribution and grid-world configuration types."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

PROB_TOL = 1e-9

Cell = tuple[int, int]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class DiscreteDistribution:
    """Successor distribution of one (state, action) pair.

    ``probabilities`` are strictly positive; use :meth:`from_row` to build one
    from a dense row with zero entries.
    """

    support: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64).reshape(-1)
        probs = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if support.shape != probs.shape:
            raise ValueError(
                f"support has {support.size} entries but probabilities has {probs.size}"
            )
        if support.size == 0:
            raise ValueError("distribution needs at least one atom")
        if not np.all(np.isfinite(probs)) or np.any(probs <= 0.0):
            raise ValueError("probabilities must be positive and finite")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {probs.sum():.12g}, not 1")
        if np.any(support < 0):
            raise ValueError("support indices must be non-negative")
        if np.unique(support).size != support.size:
            raise ValueError("support indices must be distinct")
        object.__setattr__(self, "support", _frozen(support))
        object.__setattr__(self, "probabilities", _frozen(probs))

    @classmethod
    def from_row(cls, row: np.ndarray) -> "DiscreteDistribution":
        row = np.asarray(row, dtype=float)
        support = np.flatnonzero(row > 0.0)
        return cls(support=support, probabilities=row[support])

    @classmethod
    def point_mass(cls, state: int) -> "DiscreteDistribution":
        return cls(support=np.array([state]), probabilities=np.array([1.0]))

    def __len__(self) -> int:
        return int(self.support.size)


@dataclass(frozen=True, eq=False)
class MDP:
    """Finite discounted MDP with one objective cost and ``n_c`` constraint costs.

    Arrays are stored densely and made read-only:

    - ``transition``: (S, A, S), row ``[s, a]`` is T(.|s, a)
    - ``objective_cost``: (S, A)
    - ``constraint_costs``: (n_c, S, A)
    - ``initial_distribution``: (S,)

    Shape consistency is enforced here; value-level checks (stochastic rows,
    non-negative costs, discount range) are reported by ``validate_mdp``.
    """

    transition: np.ndarray
    objective_cost: np.ndarray
    constraint_costs: np.ndarray
    initial_distribution: np.ndarray
    discount: float
    action_labels: tuple[str, ...] | None = None
    state_labels: tuple[str, ...] | None = None
    hazards: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        transition = np.array(self.transition, dtype=float)
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise ValueError(f"transition must have shape (S, A, S), got {transition.shape}")
        n_states, n_actions, _ = transition.shape
        cost = np.array(self.objective_cost, dtype=float)
        if cost.shape != (n_states, n_actions):
            raise ValueError(f"objective_cost must have shape {(n_states, n_actions)}")
        constraints = np.array(self.constraint_costs, dtype=float)
        if constraints.size == 0:
            constraints = constraints.reshape(0, n_states, n_actions)
        if constraints.ndim == 2:
            constraints = constraints[None]
        if constraints.shape[1:] != (n_states, n_actions):
            raise ValueError(
                f"constraint_costs must have shape (n_c, {n_states}, {n_actions})"
            )
        kappa0 = np.array(self.initial_distribution, dtype=float).reshape(-1)
        if kappa0.shape != (n_states,):
            raise ValueError(f"initial_distribution must have {n_states} entries")
        if self.action_labels is not None and len(self.action_labels) != n_actions:
            raise ValueError("action_labels length does not match the action count")
        if self.state_labels is not None and len(self.state_labels) != n_states:
            raise ValueError("state_labels length does not match the state count")
        hazards = tuple(sorted({int(s) for s in self.hazards}))
        if hazards and (hazards[0] < 0 or hazards[-1] >= n_states):
            raise ValueError("hazard state out of range")

        object.__setattr__(self, "transition", _frozen(transition))
        object.__setattr__(self, "objective_cost", _frozen(cost))
        object.__setattr__(self, "constraint_costs", _frozen(constraints))
        object.__setattr__(self, "initial_distribution", _frozen(kappa0))
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "hazards", hazards)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def n_constraints(self) -> int:
        return self.constraint_costs.shape[0]

    def lagrangian_cost(self, lam: np.ndarray | None = None) -> np.ndarray:
        """c(s, a) + <lam, d(s, a)> as an (S, A) array."""
        if lam is None or self.n_constraints == 0:
            return np.array(self.objective_cost)
        lam = np.asarray(lam, dtype=float).reshape(-1)
        return self.objective_cost + np.tensordot(lam, self.constraint_costs, axes=1)


class IssueKind(str, Enum):
    """Kind of invariant violated by an MDP."""

    ROW_SUM = "row_sum"
    NEGATIVE_PROBABILITY = "negative_probability"
    NON_FINITE = "non_finite"
    KAPPA0_SUM = "kappa0_sum"
    KAPPA0_NEGATIVE = "kappa0_negative"
    NEGATIVE_COST = "negative_cost"
    DISCOUNT_RANGE = "discount_range"


class ValidationIssue(BaseModel):
    kind: IssueKind
    state: int | None = None
    action: int | None = None
    constraint: int | None = None
    amount: float | None = None
    message: str = ""


class ValidationReport(BaseModel):
    issues: list[ValidationIssue] = Field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.issues

    def of_kind(self, kind: IssueKind) -> list[ValidationIssue]:
        return [issue for issue in self.issues if issue.kind == kind]

    def summary(self, limit: int = 5) -> str:
        if not self.issues:
            return "ok"
        shown = "; ".join(issue.message for issue in self.issues[:limit])
        more = len(self.issues) - limit
        return f"{shown}; +{more} more" if more > 0 else shown


class SlipModel(BaseModel):
    """Per-action transition noise of the grid world.

    The intended cell receives ``1 - p`` and each of the two headings 45
    degrees either side receives ``p / 2``; ``p`` is ``cardinal`` for
    E/W/N/S and ``diagonal`` for the diagonal moves.
    """

    cardinal: float = Field(default=0.2, ge=0.0, le=1.0)
    diagonal: float = Field(default=0.4, ge=0.0, le=1.0)

    @classmethod
    def deterministic(cls) -> "SlipModel":
        return cls(cardinal=0.0, diagonal=0.0)


def _normalize_cells(value: object) -> list[Cell]:
    cells = {(int(c[0]), int(c[1])) for c in (value or [])}
    return sorted(cells)


class GridConfig(BaseModel):
    """Rover grid world: width M, height N, cells (x, y) with y pointing up."""

    width: int = Field(ge=0)
    height: int = Field(ge=0)
    obstacles: list[Cell] = Field(default_factory=list)
    uncertain_obstacles: list[Cell] = Field(default_factory=list)
    goal: Cell = (0, 0)
    start: Cell | None = None
    slip_model: SlipModel = Field(default_factory=SlipModel)
    move_cost: float = Field(default=2.0, ge=0.0)
    obstacle_cost: float = Field(default=10.0, ge=0.0)
    goal_cost: float = Field(default=0.0, ge=0.0)

    @field_validator("obstacles", "uncertain_obstacles", mode="before")
    @classmethod
    def _sorted_cells(cls, value: object) -> list[Cell]:
        return _normalize_cells(value)

    @model_validator(mode="after")
    def _check_layout(self) -> "GridConfig":
        if self.goal in set(self.obstacles):
            raise ValueError(f"goal {self.goal} is an obstacle")
        missing = set(self.uncertain_obstacles) - set(self.obstacles)
        if missing:
            raise ValueError(f"uncertain obstacles {sorted(missing)} are not obstacles")
        return self

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def start_cell(self) -> Cell:
        # Bottom-right corner unless configured.
        return self.start if self.start is not None else (self.width - 1, 0)

    @property
    def obstacle_fraction(self) -> float:
        return len(self.obstacles) / self.n_cells if self.n_cells else 0.0

    @property
    def size_label(self) -> str:
        return f"{self.width}x{self.height}"

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height
