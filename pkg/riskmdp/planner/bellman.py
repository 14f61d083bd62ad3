"""Risk Bellman operators: value iteration, fixed-policy evaluation, greedy policies."""

from __future__ import annotations

import math
from collections.abc import Iterator

import numpy as np

from riskmdp.errors import NonConvergenceError
from riskmdp.mdp import MDP, row_support
from riskmdp.planner.types import Policy
from riskmdp.risk import RiskMeasure, sigma_batch, sigma_rows

TIE_TOL = 1e-10
_MAX_POLICY_STEPS = 100


def _multipliers(mdp: MDP, lam) -> np.ndarray:
    if lam is None:
        return np.zeros(mdp.n_constraints)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size != mdp.n_constraints:
        raise ValueError(f"{lam.size} multiplier(s) for {mdp.n_constraints} constraint(s)")
    if np.any(lam < 0.0) or not np.all(np.isfinite(lam)):
        raise ValueError("multipliers must be finite and non-negative")
    return lam


def iteration_bound(tol: float, discount: float, scale: float) -> int:
    """Value-iteration steps after which a correct σ must have met ``tol``."""
    if scale <= 0.0:
        return 1
    needed = math.log(tol * (1.0 - discount) / (discount * scale)) / math.log(discount)
    return max(1, math.ceil(needed)) + 10


def q_values(mdp: MDP, V: np.ndarray, lam, risk: RiskMeasure) -> np.ndarray:
    """c(s, a) + <λ, d(s, a)> + γσ(V, s, p(.|s, a)) as an (S, A) array."""
    support, probs = row_support(mdp)
    risk_term = sigma_rows(risk, V, support, probs).values.reshape(mdp.n_states, mdp.n_actions)
    return mdp.lagrangian_cost(_multipliers(mdp, lam)) + mdp.discount * risk_term


def bellman_iterates(
    mdp: MDP, lam, risk: RiskMeasure, V0: np.ndarray | None = None
) -> Iterator[np.ndarray]:
    """Yield V_1, V_2, ... of V_{k+1}(s) = min_a [c + <λ, d> + γσ(V_k)] from V0 (default 0)."""
    cost = mdp.lagrangian_cost(_multipliers(mdp, lam))
    support, probs = row_support(mdp)
    V = np.zeros(mdp.n_states) if V0 is None else np.asarray(V0, dtype=float).copy()
    shape = (mdp.n_states, mdp.n_actions)
    while True:
        risk_term = sigma_rows(risk, V, support, probs).values.reshape(shape)
        V = (cost + mdp.discount * risk_term).min(axis=1)
        yield V


def risk_value_iteration(mdp: MDP, lam, risk: RiskMeasure, tol: float = 1e-8) -> np.ndarray:
    """Fixed point of the risk Bellman operator to sup-norm accuracy ``tol``.

    Raises :class:`NonConvergenceError` past the contraction bound, which
    only happens when σ is not monotone and translation invariant.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    cost = mdp.lagrangian_cost(_multipliers(mdp, lam))
    scale = float(np.abs(cost).max(initial=0.0))
    if scale == 0.0:
        return np.zeros(mdp.n_states)
    limit = iteration_bound(tol, mdp.discount, scale)
    threshold = tol * (1.0 - mdp.discount) / mdp.discount
    previous = np.zeros(mdp.n_states)
    for k, V in enumerate(bellman_iterates(mdp, lam, risk), start=1):
        step = float(np.abs(V - previous).max())
        if step <= threshold:
            return V
        if k >= limit:
            raise NonConvergenceError(k, step)
        previous = V
    raise AssertionError("unreachable")


def extract_policy(mdp: MDP, V: np.ndarray, lam, risk: RiskMeasure) -> Policy:
    """Greedy policy argmin_a [c + <λ, d> + γσ(V)]; near-ties go to the lowest action index."""
    Q = q_values(mdp, np.asarray(V, dtype=float), lam, risk)
    best = Q.min(axis=1, keepdims=True)
    ties = Q <= best + TIE_TOL * np.maximum(1.0, np.abs(best))
    return Policy.from_array(np.argmax(ties, axis=1))


def _policy_rows(mdp: MDP, policy: Policy) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    policy.check(mdp.n_states, mdp.n_actions)
    actions = policy.as_array()
    rows = np.arange(mdp.n_states) * mdp.n_actions + actions
    support, probs = row_support(mdp)
    return actions, support[rows], probs[rows]


def policy_risk_values(
    mdp: MDP, policy: Policy, costs: np.ndarray, risk: RiskMeasure, tol: float = 1e-8
) -> np.ndarray:
    """Nested discounted risk V(s) = cost(s, π(s)) + γσ(V, s, p(.|s, π(s))) of a fixed policy.

    Alternates picking σ's maximizing weights at V with an exact linear
    solve; each step can only raise V, and the result is then checked (and
    polished) as a fixed point of the nested recursion.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    actions, support, probs = _policy_rows(mdp, policy)
    n = mdp.n_states
    states = np.arange(n)
    cost = np.asarray(costs, dtype=float).reshape(n, mdp.n_actions)[states, actions]
    gamma = mdp.discount
    eye = np.eye(n)

    V = np.linalg.solve(eye - gamma * mdp.transition[states, actions], cost)
    if risk.is_linear:
        return V

    for _ in range(_MAX_POLICY_STEPS):
        weights = sigma_batch(risk, V[support], probs).weights
        kernel = np.zeros((n, n))
        np.add.at(kernel, (np.repeat(states, support.shape[1]), support.ravel()), weights.ravel())
        V_next = np.linalg.solve(eye - gamma * kernel, cost)
        step = float(np.abs(V_next - V).max())
        V = V_next
        if step <= tol * (1.0 - gamma):
            break

    scale = float(np.abs(cost).max(initial=0.0))
    limit = iteration_bound(tol, gamma, max(scale, tol))
    residual = float("inf")
    for _ in range(limit):
        TV = cost + gamma * sigma_batch(risk, V[support], probs).values
        residual = float(np.abs(TV - V).max())
        V = TV
        if residual <= tol * (1.0 - gamma):
            return V
    raise NonConvergenceError(limit, residual)


def policy_risk_evaluation(
    mdp: MDP, policy: Policy, costs: np.ndarray, risk: RiskMeasure, tol: float = 1e-8
) -> float:
    """<κ0, V> of :func:`policy_risk_values`."""
    V = policy_risk_values(mdp, policy, costs, risk, tol)
    return float(mdp.initial_distribution @ V)


def evaluate_policy(
    mdp: MDP, policy: Policy, risk: RiskMeasure, tol: float = 1e-8
) -> tuple[float, list[float]]:
    """Objective J and constraint values D^i of a policy under ``risk``."""
    J = policy_risk_evaluation(mdp, policy, mdp.objective_cost, risk, tol)
    D = [
        policy_risk_evaluation(mdp, policy, mdp.constraint_costs[i], risk, tol)
        for i in range(mdp.n_constraints)
    ]
    return J, D
