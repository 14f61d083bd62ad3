"""Rover grid-world family.

Cells are ``(x, y)`` with ``x`` growing east and ``y`` growing north; state
``s = x + M * y``. Obstacles are not absorbing: standing on one costs
``obstacle_cost`` per step and the walk continues.
"""

from __future__ import annotations

import logging
from collections import deque

import numpy as np

from riskmdp.errors import GridConfigError
from riskmdp.mdp.types import MDP, Cell, GridConfig, SlipModel
from riskmdp.runtime_config import default_layout_seed

logger = logging.getLogger(__name__)

ACTION_LABELS: tuple[str, ...] = ("E", "W", "N", "S", "NE", "NW", "SE", "SW")
ACTION_OFFSETS: tuple[Cell, ...] = (
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
)
# Compass order, 45 degrees apart; neighbours in this ring are the slip headings.
_RING: tuple[str, ...] = ("E", "NE", "N", "NW", "W", "SW", "S", "SE")
NEIGHBOR_OFFSETS: tuple[Cell, ...] = ACTION_OFFSETS


def cell_to_state(config: GridConfig, cell: Cell) -> int:
    x, y = cell
    if not config.in_bounds(cell):
        raise GridConfigError(f"cell {cell} outside {config.size_label} grid")
    return x + config.width * y


def state_to_cell(config: GridConfig, s: int) -> Cell:
    if not 0 <= s < config.n_cells:
        raise GridConfigError(f"state {s} outside {config.size_label} grid")
    return s % config.width, s // config.width


def action_outcomes(action: int, slip: SlipModel) -> list[tuple[Cell, float]]:
    """(offset, probability) pairs of one action; zero-probability pairs dropped."""
    label = ACTION_LABELS[action]
    p = slip.cardinal if len(label) == 1 else slip.diagonal
    k = _RING.index(label)
    left = ACTION_OFFSETS[ACTION_LABELS.index(_RING[(k + 1) % 8])]
    right = ACTION_OFFSETS[ACTION_LABELS.index(_RING[(k - 1) % 8])]
    outcomes = [(ACTION_OFFSETS[action], 1.0 - p), (left, p / 2.0), (right, p / 2.0)]
    return [(offset, prob) for offset, prob in outcomes if prob > 0.0]


def build_gridworld(config: GridConfig, discount: float = 0.95) -> MDP:
    """Build the grid-world MDP of ``config``.

    The goal absorbs with zero cost. Off-grid slip mass stays in place. The
    single constraint cost is ``move_cost`` on every non-goal (s, a).
    """
    if config.n_cells == 0:
        raise GridConfigError("grid must have at least one cell")
    for name, cell in (("goal", config.goal), ("start", config.start_cell)):
        if not config.in_bounds(cell):
            raise GridConfigError(f"{name} {cell} outside {config.size_label} grid")
    for cell in config.obstacles:
        if not config.in_bounds(cell):
            raise GridConfigError(f"obstacle {cell} outside {config.size_label} grid")

    n_states = config.n_cells
    n_actions = len(ACTION_LABELS)
    goal = cell_to_state(config, config.goal)
    hazards = [cell_to_state(config, cell) for cell in config.obstacles]

    transition = np.zeros((n_states, n_actions, n_states))
    outcomes = [action_outcomes(a, config.slip_model) for a in range(n_actions)]
    for s in range(n_states):
        if s == goal:
            transition[s, :, s] = 1.0
            continue
        x, y = state_to_cell(config, s)
        for a in range(n_actions):
            for (dx, dy), prob in outcomes[a]:
                target = (x + dx, y + dy)
                s_next = cell_to_state(config, target) if config.in_bounds(target) else s
                transition[s, a, s_next] += prob

    objective = np.zeros((n_states, n_actions))
    objective[hazards, :] = config.obstacle_cost
    objective[goal, :] = config.goal_cost
    fuel = np.full((n_states, n_actions), config.move_cost)
    fuel[goal, :] = 0.0

    kappa0 = np.zeros(n_states)
    kappa0[cell_to_state(config, config.start_cell)] = 1.0

    return MDP(
        transition=transition,
        objective_cost=objective,
        constraint_costs=fuel[None],
        initial_distribution=kappa0,
        discount=discount,
        action_labels=ACTION_LABELS,
        state_labels=tuple(f"{s % config.width},{s // config.width}" for s in range(n_states)),
        hazards=tuple(hazards),
    )


def _neighbors(config: GridConfig, cell: Cell) -> list[Cell]:
    x, y = cell
    cells = [(x + dx, y + dy) for dx, dy in NEIGHBOR_OFFSETS]
    return [c for c in cells if config.in_bounds(c)]


def perturb_obstacles(config: GridConfig, prob: float, rng_seed: int) -> GridConfig:
    """Move each uncertain obstacle to a random valid neighbour with probability ``prob``.

    One uniform draw per uncertain obstacle (in sorted order) decides the
    move; a second picks the neighbour among free in-grid cells other than
    the goal and the start. The vacated cell becomes free. An obstacle with
    no free neighbour stays put.
    """
    if not 0.0 <= prob <= 1.0:
        raise GridConfigError(f"perturbation probability {prob} outside [0, 1]")
    if prob == 0.0 or not config.uncertain_obstacles:
        return config

    rng = np.random.default_rng(rng_seed)
    certain = set(config.obstacles) - set(config.uncertain_obstacles)
    reserved = {config.goal, config.start_cell}
    pending = list(config.uncertain_obstacles)
    moved: list[Cell] = []
    while pending:
        cell = pending.pop(0)
        if rng.random() >= prob:
            moved.append(cell)
            continue
        occupied = certain | set(pending) | set(moved)
        choices = [
            c for c in _neighbors(config, cell) if c not in reserved and c not in occupied
        ]
        if not choices:
            moved.append(cell)
            continue
        moved.append(choices[int(rng.integers(len(choices)))])

    data = config.model_dump()
    data["obstacles"] = sorted(certain | set(moved))
    data["uncertain_obstacles"] = sorted(set(moved))
    return GridConfig.model_validate(data)


def _reachable(config: GridConfig, blocked: set[Cell]) -> bool:
    start, goal = config.start_cell, config.goal
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell == goal:
            return True
        for nxt in _neighbors(config, cell):
            if nxt not in seen and nxt not in blocked:
                seen.add(nxt)
                queue.append(nxt)
    return False


def generate_grid_config(
    width: int,
    height: int,
    obstacle_frac: float = 0.25,
    n_uncertain: int = 0,
    seed: int | None = None,
    *,
    slip_model: SlipModel | None = None,
    move_cost: float = 2.0,
    obstacle_cost: float = 10.0,
    max_attempts: int = 200,
) -> GridConfig:
    """Seeded random layout with the goal top-left and the start bottom-right.

    ``round(obstacle_frac * M * N)`` cells become obstacles, never the goal or
    the start. The first ``n_uncertain`` of them are isolated single cells
    (no obstacle among their 8 neighbours). Layouts without an obstacle-free
    8-connected path from start to goal are redrawn.
    """
    if width <= 0 or height <= 0:
        raise GridConfigError(f"invalid grid size {width}x{height}")
    if not 0.0 <= obstacle_frac < 1.0:
        raise GridConfigError(f"obstacle fraction {obstacle_frac} outside [0, 1)")
    if n_uncertain < 0:
        raise GridConfigError("number of uncertain obstacles must be non-negative")

    seed = default_layout_seed() if seed is None else seed
    base = GridConfig(
        width=width,
        height=height,
        goal=(0, height - 1),
        start=(width - 1, 0),
        slip_model=slip_model or SlipModel(),
        move_cost=move_cost,
        obstacle_cost=obstacle_cost,
    )
    reserved = {base.goal, base.start_cell}
    candidates = [
        (x, y) for y in range(height) for x in range(width) if (x, y) not in reserved
    ]
    n_obstacles = max(int(round(obstacle_frac * width * height)), n_uncertain)
    if n_obstacles > len(candidates):
        raise GridConfigError(
            f"cannot place {n_obstacles} obstacles on a {width}x{height} grid"
        )

    rng = np.random.default_rng(seed)
    for attempt in range(max_attempts):
        order = [candidates[i] for i in rng.permutation(len(candidates))]
        uncertain: list[Cell] = []
        taken: set[Cell] = set()
        for cell in order:
            if len(uncertain) == n_uncertain:
                break
            if any(n in taken for n in _neighbors(base, cell)):
                continue
            uncertain.append(cell)
            taken.add(cell)
        if len(uncertain) < n_uncertain:
            continue
        halo = {n for cell in uncertain for n in _neighbors(base, cell)}
        rest = [c for c in order if c not in taken and c not in halo]
        n_rest = n_obstacles - len(uncertain)
        if len(rest) < n_rest:
            continue
        obstacles = taken | set(rest[:n_rest])
        if not _reachable(base, obstacles):
            continue
        logger.debug("grid layout accepted after %s attempt(s)", attempt + 1)
        return base.model_copy(
            update={
                "obstacles": sorted(obstacles),
                "uncertain_obstacles": sorted(uncertain),
            }
        )
    raise GridConfigError(
        f"no layout with {n_obstacles} obstacles ({n_uncertain} isolated) "
        f"found for {width}x{height} after {max_attempts} attempts"
    )


def parse_size(text: str) -> tuple[int, int]:
    """Parse ``"MxN"`` into ``(M, N)``."""
    parts = text.lower().replace("×", "x").split("x")
    if len(parts) != 2:
        raise GridConfigError(f"invalid size {text!r}, expected MxN")
    try:
        width, height = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise GridConfigError(f"invalid size {text!r}, expected MxN") from exc
    if width <= 0 or height <= 0:
        raise GridConfigError(f"invalid size {text!r}, both sides must be positive")
    return width, height
