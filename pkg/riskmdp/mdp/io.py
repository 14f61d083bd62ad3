"""JSON codecs for ``mdp.json`` and ``grid.json``."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, model_validator

from riskmdp.mdp.types import MDP, GridConfig


def _shape(value: list) -> tuple[int, ...] | None:
    try:
        return np.shape(value)
    except ValueError:
        return None  # ragged


class MDPDocument(BaseModel):
    """On-disk schema of ``mdp.json``; probabilities keep full float precision."""

    states: int
    actions: int
    transition: list[list[list[float]]]
    cost: list[list[float]]
    constraint_costs: list[list[list[float]]] = Field(default_factory=list)
    kappa0: list[float]
    gamma: float
    action_labels: list[str] | None = None
    state_labels: list[str] | None = None
    hazards: list[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _shapes_match_counts(self) -> "MDPDocument":
        S, A = self.states, self.actions
        if S < 1 or A < 1:
            raise ValueError(f"need at least one state and one action, got {S}x{A}")
        expected = {
            "transition": (_shape(self.transition), (S, A, S)),
            "cost": (_shape(self.cost), (S, A)),
            "kappa0": (_shape(self.kappa0), (S,)),
        }
        if self.constraint_costs:
            shape = _shape(self.constraint_costs)
            expected["constraint_costs"] = (shape, (len(self.constraint_costs), S, A))
        for name, (shape, want) in expected.items():
            if shape != want:
                raise ValueError(f"{name} has shape {shape}, expected {want} from states/actions")
        if self.action_labels is not None and len(self.action_labels) != A:
            raise ValueError(f"{len(self.action_labels)} action labels for {A} actions")
        if self.state_labels is not None and len(self.state_labels) != S:
            raise ValueError(f"{len(self.state_labels)} state labels for {S} states")
        if any(not 0 <= h < S for h in self.hazards):
            raise ValueError(f"hazard states must lie in [0, {S})")
        return self

    @classmethod
    def from_mdp(cls, mdp: MDP) -> "MDPDocument":
        return cls(
            states=mdp.n_states,
            actions=mdp.n_actions,
            transition=mdp.transition.tolist(),
            cost=mdp.objective_cost.tolist(),
            constraint_costs=mdp.constraint_costs.tolist(),
            kappa0=mdp.initial_distribution.tolist(),
            gamma=mdp.discount,
            action_labels=list(mdp.action_labels) if mdp.action_labels else None,
            state_labels=list(mdp.state_labels) if mdp.state_labels else None,
            hazards=list(mdp.hazards),
        )

    def to_mdp(self) -> MDP:
        constraints = np.asarray(self.constraint_costs, dtype=float)
        if constraints.size == 0:
            constraints = np.zeros((0, self.states, self.actions))
        return MDP(
            transition=np.asarray(self.transition, dtype=float),
            objective_cost=np.asarray(self.cost, dtype=float),
            constraint_costs=constraints,
            initial_distribution=np.asarray(self.kappa0, dtype=float),
            discount=self.gamma,
            action_labels=tuple(self.action_labels) if self.action_labels else None,
            state_labels=tuple(self.state_labels) if self.state_labels else None,
            hazards=tuple(self.hazards),
        )


def write_mdp(mdp: MDP, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # json writes floats with repr, so values round-trip exactly.
    payload = MDPDocument.from_mdp(mdp).model_dump()
    with path.open("w", encoding="utf-8") as f:
        json.dump(payload, f)
    return path


def read_mdp(path: str | Path) -> MDP:
    with Path(path).open("r", encoding="utf-8") as f:
        payload = json.load(f)
    if isinstance(payload, dict) and "mdp" in payload:
        payload = payload["mdp"]
    return MDPDocument.model_validate(payload).to_mdp()


def write_grid(
    config: GridConfig, path: str | Path, manifest_hash: str | None = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = config.model_dump(mode="json")
    payload = {"grid": grid, "manifest_hash": manifest_hash} if manifest_hash else grid
    with path.open("w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_grid(path: str | Path) -> GridConfig:
    """Read a bare GridConfig document or a ``{"grid": ..., "manifest_hash": ...}`` wrapper."""
    with Path(path).open("r", encoding="utf-8") as f:
        payload = json.load(f)
    if isinstance(payload, dict) and "grid" in payload:
        payload = payload["grid"]
    return GridConfig.model_validate(payload)
