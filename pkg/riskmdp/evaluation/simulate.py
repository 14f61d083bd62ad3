from __future__ import annotations

import logging
from collections.abc import Iterable

import numpy as np

from riskmdp.evaluation.types import Trajectory
from riskmdp.mdp import MDP, absorbing_states
from riskmdp.planner import Policy
from riskmdp.runtime_config import get_int

logger = logging.getLogger(__name__)


def default_max_steps() -> int:
    return get_int("evaluation", "max_steps", 400)


def _draw(cumulative: np.ndarray, u: float) -> int:
    index = int(np.searchsorted(cumulative, u, side="right"))
    return min(index, cumulative.size - 1)


def simulate(
    mdp: MDP,
    policy: Policy,
    seed: int,
    max_steps: int | None = None,
    *,
    hazards: Iterable[int] | None = None,
) -> Trajectory:
    """Sample s0 ~ κ0 and follow ``policy`` until an absorbing state or ``max_steps``.

    A step collides when it lands in one of ``hazards`` (default: ``mdp.hazards``).
    The same seed always yields the same trajectory.
    """
    max_steps = default_max_steps() if max_steps is None else max_steps
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    policy.check(mdp.n_states, mdp.n_actions)
    hazard_set = set(mdp.hazards if hazards is None else hazards)
    absorbing = set(absorbing_states(mdp).tolist())
    actions = policy.as_array()
    states_idx = np.arange(mdp.n_states)
    kernel = np.cumsum(mdp.transition[states_idx, actions], axis=1)
    gamma = mdp.discount

    rng = np.random.default_rng(seed)
    s = _draw(np.cumsum(mdp.initial_distribution), rng.random())
    states, taken, obj, cons, hits = [s], [], [], [], []
    disc_obj = 0.0
    disc_cons = np.zeros(mdp.n_constraints)
    weight = 1.0
    for _ in range(max_steps):
        if s in absorbing:
            break
        a = int(actions[s])
        c = float(mdp.objective_cost[s, a])
        d = mdp.constraint_costs[:, s, a]
        s_next = _draw(kernel[s], rng.random())
        taken.append(a)
        obj.append(c)
        cons.append(d.tolist())
        hits.append(s_next in hazard_set)
        disc_obj += weight * c
        disc_cons += weight * d
        weight *= gamma
        states.append(s_next)
        s = s_next

    truncated = s not in absorbing and len(taken) == max_steps
    if truncated:
        logger.debug("simulation truncated after %s steps (seed %s)", max_steps, seed)
    return Trajectory(
        states=states,
        actions=taken,
        objective_costs=obj,
        constraint_costs=cons,
        collisions=hits,
        discount=gamma,
        discounted_objective=disc_obj,
        discounted_constraints=disc_cons.tolist(),
        truncated=truncated,
    )
