from __future__ import annotations

import numpy as np
import pytest

from riskmdp.mdp import MDP
from riskmdp.runtime_config import reset_runtime_config


@pytest.fixture(autouse=True)
def _runtime_config(monkeypatch):
    monkeypatch.delenv("RISKMDP_CONFIG", raising=False)
    reset_runtime_config()
    yield
    reset_runtime_config()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_mdp(transition, cost, constraints=None, kappa0=None, discount=0.9, **kwargs) -> MDP:
    transition = np.asarray(transition, dtype=float)
    n_states, n_actions, _ = transition.shape
    if constraints is None:
        constraints = np.zeros((0, n_states, n_actions))
    if kappa0 is None:
        kappa0 = np.zeros(n_states)
        kappa0[0] = 1.0
    return MDP(
        transition=transition,
        objective_cost=np.asarray(cost, dtype=float),
        constraint_costs=np.asarray(constraints, dtype=float),
        initial_distribution=np.asarray(kappa0, dtype=float),
        discount=discount,
        **kwargs,
    )


def random_mdp(
    rng: np.random.Generator,
    n_states: int = 4,
    n_actions: int = 2,
    n_constraints: int = 1,
    discount: float = 0.9,
    support: int = 3,
) -> MDP:
    transition = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            atoms = rng.choice(n_states, size=min(support, n_states), replace=False)
            transition[s, a, atoms] = rng.dirichlet(np.ones(atoms.size))
    return make_mdp(
        transition,
        rng.uniform(0.0, 5.0, (n_states, n_actions)),
        rng.uniform(0.0, 3.0, (n_constraints, n_states, n_actions)),
        rng.dirichlet(np.ones(n_states)),
        discount,
    )


@pytest.fixture
def build_mdp():
    return make_mdp


@pytest.fixture
def chain_mdp() -> MDP:
    """0 -> 1 -> 2 with unit cost until the absorbing goal 2."""
    transition = np.zeros((3, 1, 3))
    transition[0, 0, 1] = 1.0
    transition[1, 0, 2] = 1.0
    transition[2, 0, 2] = 1.0
    cost = np.array([[1.0], [1.0], [0.0]])
    return make_mdp(transition, cost, cost[None], discount=0.5)


@pytest.fixture
def two_state_mdp() -> MDP:
    """Action 0 is cheap but uses budget, action 1 the reverse; state 1 absorbs."""
    transition = np.zeros((2, 2, 2))
    transition[0, 0] = [0.5, 0.5]
    transition[0, 1] = [0.0, 1.0]
    transition[1, :, 1] = 1.0
    cost = np.array([[1.0, 3.0], [0.0, 0.0]])
    fuel = np.array([[2.0, 0.5], [0.0, 0.0]])
    return make_mdp(transition, cost, fuel[None], discount=0.9)


@pytest.fixture
def self_loop_mdp() -> MDP:
    """Single state, single action, c = 1, d = 3, gamma = 0.95."""
    return make_mdp(
        np.ones((1, 1, 1)), [[1.0]], [[[3.0]]], [1.0], discount=0.95
    )
