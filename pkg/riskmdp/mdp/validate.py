from __future__ import annotations

import numpy as np

from riskmdp.mdp.types import (
    MDP,
    PROB_TOL,
    DiscreteDistribution,
    IssueKind,
    ValidationIssue,
    ValidationReport,
)


def validate_mdp(mdp: MDP) -> ValidationReport:
    """Report every violated MDP invariant with its location.

    Validation never raises; an empty report means the MDP is well-formed.
    """
    issues: list[ValidationIssue] = []
    transition = mdp.transition

    bad = ~np.isfinite(transition).all(axis=2)
    for s, a in zip(*np.nonzero(bad)):
        issues.append(
            ValidationIssue(
                kind=IssueKind.NON_FINITE,
                state=int(s),
                action=int(a),
                message=f"T(.|s={s}, a={a}) has non-finite entries",
            )
        )

    negative = (transition < 0.0).any(axis=2) & ~bad
    for s, a in zip(*np.nonzero(negative)):
        issues.append(
            ValidationIssue(
                kind=IssueKind.NEGATIVE_PROBABILITY,
                state=int(s),
                action=int(a),
                amount=float(transition[s, a].min()),
                message=f"T(.|s={s}, a={a}) has a negative entry {transition[s, a].min():.6g}",
            )
        )

    row_sums = transition.sum(axis=2)
    deficit = 1.0 - row_sums
    off = (np.abs(deficit) > PROB_TOL) & ~bad
    for s, a in zip(*np.nonzero(off)):
        issues.append(
            ValidationIssue(
                kind=IssueKind.ROW_SUM,
                state=int(s),
                action=int(a),
                amount=float(deficit[s, a]),
                message=(
                    f"T(.|s={s}, a={a}) sums to {row_sums[s, a]:.12g} "
                    f"(deficit {deficit[s, a]:.6g})"
                ),
            )
        )

    kappa0 = mdp.initial_distribution
    if not np.all(np.isfinite(kappa0)):
        issues.append(
            ValidationIssue(kind=IssueKind.NON_FINITE, message="kappa0 has non-finite entries")
        )
    else:
        for s in np.flatnonzero(kappa0 < 0.0):
            issues.append(
                ValidationIssue(
                    kind=IssueKind.KAPPA0_NEGATIVE,
                    state=int(s),
                    amount=float(kappa0[s]),
                    message=f"kappa0[{s}] = {kappa0[s]:.6g} is negative",
                )
            )
        if abs(kappa0.sum() - 1.0) > PROB_TOL:
            issues.append(
                ValidationIssue(
                    kind=IssueKind.KAPPA0_SUM,
                    amount=float(1.0 - kappa0.sum()),
                    message=f"kappa0 sums to {kappa0.sum():.12g}",
                )
            )

    issues.extend(_cost_issues(mdp.objective_cost, None))
    for i in range(mdp.n_constraints):
        issues.extend(_cost_issues(mdp.constraint_costs[i], i))

    if not (0.0 < mdp.discount < 1.0):
        issues.append(
            ValidationIssue(
                kind=IssueKind.DISCOUNT_RANGE,
                amount=mdp.discount,
                message=f"discount {mdp.discount} is not inside (0, 1)",
            )
        )
    return ValidationReport(issues=issues)


def _cost_issues(cost: np.ndarray, constraint: int | None) -> list[ValidationIssue]:
    name = "c" if constraint is None else f"d[{constraint}]"
    issues = []
    for s, a in zip(*np.nonzero(~np.isfinite(cost))):
        issues.append(
            ValidationIssue(
                kind=IssueKind.NON_FINITE,
                state=int(s),
                action=int(a),
                constraint=constraint,
                message=f"{name}(s={s}, a={a}) is not finite",
            )
        )
    with np.errstate(invalid="ignore"):
        negative = np.isfinite(cost) & (cost < 0.0)
    for s, a in zip(*np.nonzero(negative)):
        issues.append(
            ValidationIssue(
                kind=IssueKind.NEGATIVE_COST,
                state=int(s),
                action=int(a),
                constraint=constraint,
                amount=float(cost[s, a]),
                message=f"{name}(s={s}, a={a}) = {cost[s, a]:.6g} is negative",
            )
        )
    return issues


def successor_distribution(mdp: MDP, s: int, a: int) -> DiscreteDistribution:
    if not 0 <= s < mdp.n_states:
        raise IndexError(f"state {s} out of range [0, {mdp.n_states})")
    if not 0 <= a < mdp.n_actions:
        raise IndexError(f"action {a} out of range [0, {mdp.n_actions})")
    return DiscreteDistribution.from_row(mdp.transition[s, a])


def row_support(mdp: MDP) -> tuple[np.ndarray, np.ndarray]:
    """Padded successor supports of all (s, a) rows, row index ``s * A + a``.

    Returns ``(index, probs)`` of shape (S * A, K) where K is the largest
    support size; padded slots repeat the first successor with probability 0.
    """
    rows = mdp.transition.reshape(-1, mdp.n_states)
    positive = rows > 0.0
    width = max(1, int(positive.sum(axis=1).max(initial=1)))
    # Stable argsort puts the positive entries first, in state order.
    order = np.argsort(~positive, axis=1, kind="stable")[:, :width]
    probs = np.take_along_axis(rows, order, axis=1)
    probs = np.where(probs > 0.0, probs, 0.0)
    index = np.where(probs > 0.0, order, order[:, :1])
    return index, probs


def absorbing_states(mdp: MDP) -> np.ndarray:
    """States that self-loop under every action with zero costs."""
    states = np.arange(mdp.n_states)
    loops = mdp.transition[states, :, states] == 1.0
    free = mdp.objective_cost == 0.0
    if mdp.n_constraints:
        free &= (mdp.constraint_costs == 0.0).all(axis=0)
    return np.flatnonzero((loops & free).all(axis=1))
