"""Difference-of-convex program over (V, λ[, ζ]) and its linearization.

Each (s, a) pair contributes one constraint::

    f1(V) - g1(λ, ζ) - g2(V, ζ) <= 0,    f1(V) = V(s)

with g1 linear (c + <λ, d>, or ζc + <λ, d> in the EVaR variables) and g2
convex: γ<p, V> for the expectation, γ(ζ + (1/ε) Σ p (V - ζ)+) for CVaR and
γ log(Σ p e^V / ε) for EVaR. The objective ``<λ, β> - <κ0, V>`` is linear.

Feasibility is judged on the tight rows, where the ζ-infimum is taken inside
each constraint (``tight_g2``). Those rows do not depend on the CVaR ζ and are
positively homogeneous in (Ṽ, λ̃, ζ) for EVaR, so ζ is held at its starting
value by every linearization and acts as the scale of the EVaR variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from riskmdp.errors import SubgradientError
from riskmdp.risk import RiskKind, RiskMeasure, sigma_batch
from riskmdp.solver.types import LinearProgram

EVAR_ZETA_MIN = 1e-6


def _readonly(array, dtype=float) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DCPProgram:
    """Bellman-inequality DC program; one row per (state, action).

    ``support``/``probs`` are the padded successor table of every row
    (padded slots carry probability 0).
    """

    risk: RiskMeasure
    discount: float
    kappa0: np.ndarray
    budgets: np.ndarray
    row_state: np.ndarray
    row_action: np.ndarray
    cost: np.ndarray
    constraint_cost: np.ndarray
    support: np.ndarray
    probs: np.ndarray
    convexity_checks: int = 4
    check_seed: int = field(default=0, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kappa0", _readonly(self.kappa0))
        object.__setattr__(self, "budgets", _readonly(np.reshape(self.budgets, -1)))
        object.__setattr__(self, "row_state", _readonly(self.row_state, np.int64))
        object.__setattr__(self, "row_action", _readonly(self.row_action, np.int64))
        object.__setattr__(self, "cost", _readonly(self.cost))
        constraint_cost = np.array(self.constraint_cost, dtype=float).reshape(
            self.row_state.size, self.budgets.size
        )
        object.__setattr__(self, "constraint_cost", _readonly(constraint_cost))
        object.__setattr__(self, "support", _readonly(self.support, np.int64))
        object.__setattr__(self, "probs", _readonly(self.probs))

        n_states = self.kappa0.size
        covered = np.zeros(n_states, dtype=bool)
        covered[self.row_state] = True
        if not covered.all():
            missing = np.flatnonzero(~covered)[:5].tolist()
            raise ValueError(f"states {missing} appear in no constraint")
        pairs = self.row_state * (int(self.row_action.max(initial=0)) + 1) + self.row_action
        if np.unique(pairs).size != pairs.size:
            raise ValueError("a (state, action) pair appears in more than one constraint")
        if self.support.shape != self.probs.shape or self.support.shape[0] != self.n_rows:
            raise ValueError("successor table does not match the constraint rows")
        if self.convexity_checks:
            self._check_convexity()

    @property
    def n_states(self) -> int:
        return self.kappa0.size

    @property
    def n_constraints(self) -> int:
        return self.budgets.size

    @property
    def n_rows(self) -> int:
        return self.row_state.size

    @property
    def has_zeta(self) -> bool:
        return self.risk.kind != RiskKind.EXPECTATION

    @property
    def is_linear(self) -> bool:
        return self.risk.is_linear

    @property
    def n_vars(self) -> int:
        return self.n_states + self.n_constraints + int(self.has_zeta)

    @property
    def zeta_lower(self) -> float:
        return EVAR_ZETA_MIN if self.risk.kind == RiskKind.EVAR else 0.0

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        x = np.asarray(x, dtype=float)
        n, k = self.n_states, self.n_constraints
        zeta = float(x[n + k]) if self.has_zeta else 1.0
        return x[:n], x[n : n + k], zeta

    def pack(self, V: np.ndarray, lam: np.ndarray, zeta: float = 1.0) -> np.ndarray:
        parts = [np.asarray(V, dtype=float), np.asarray(lam, dtype=float).reshape(-1)]
        if self.has_zeta:
            parts.append(np.array([zeta], dtype=float))
        return np.concatenate(parts)

    def initial_point(self) -> np.ndarray:
        # V = 0, λ = 0, ζ = 1: feasible for non-negative costs.
        return self.pack(np.zeros(self.n_states), np.zeros(self.n_constraints), 1.0)

    def objective(self, x: np.ndarray) -> float:
        V, lam, _ = self.split(x)
        return float(lam @ self.budgets - self.kappa0 @ V)

    def lower_bound(self, x: np.ndarray) -> float:
        """<κ0, V> - <λ, β>, divided by ζ in the EVaR variables."""
        _, _, zeta = self.split(x)
        bound = -self.objective(x)
        return bound / zeta if self.risk.kind == RiskKind.EVAR else bound

    def g1(self, x: np.ndarray) -> np.ndarray:
        _, lam, zeta = self.split(x)
        scale = zeta if self.risk.kind == RiskKind.EVAR else 1.0
        return scale * self.cost + self.constraint_cost @ lam

    def g2(self, x: np.ndarray) -> np.ndarray:
        """Convex part of each constraint with ζ as a program variable."""
        V, _, zeta = self.split(x)
        successors = V[self.support]
        gamma, eps = self.discount, self.risk.epsilon
        if self.risk.kind == RiskKind.EXPECTATION:
            return gamma * (self.probs * successors).sum(axis=1)
        if self.risk.kind == RiskKind.CVAR:
            excess = np.maximum(successors - zeta, 0.0)
            return gamma * (zeta + (self.probs * excess).sum(axis=1) / eps)
        return gamma * (logsumexp(successors, b=self.probs, axis=1) + np.log(1.0 / eps))

    def g2_tangent(self, x_hat: np.ndarray) -> "Tangent":
        """First-order expansion of :meth:`g2` in (V, ζ) at ``x_hat``.

        Raises :class:`SubgradientError` naming the first row whose gradient
        is not finite.
        """
        V, _, zeta = self.split(x_hat)
        successors = V[self.support]
        gamma, eps = self.discount, self.risk.epsilon
        zeta_slope = np.zeros(self.n_rows)
        with np.errstate(invalid="ignore", over="ignore"):
            if self.risk.kind == RiskKind.EXPECTATION:
                weights = gamma * self.probs
            elif self.risk.kind == RiskKind.CVAR:
                above = np.where((successors > zeta) & (self.probs > 0.0), self.probs, 0.0)
                weights = gamma * above / eps
                zeta_slope = gamma * (1.0 - above.sum(axis=1) / eps)
            else:
                log_mgf = logsumexp(successors, b=self.probs, axis=1)
                weights = gamma * self.probs * np.exp(successors - log_mgf[:, None])
            constant = self.g2(x_hat) - (weights * successors).sum(axis=1) - zeta_slope * zeta
        bad = ~(np.isfinite(weights).all(axis=1) & np.isfinite(constant))
        if bad.any():
            r = int(np.flatnonzero(bad)[0])
            raise SubgradientError(int(self.row_state[r]), int(self.row_action[r]))
        return Tangent(self, weights, zeta_slope, constant)

    def tight_g2(self, x: np.ndarray) -> np.ndarray:
        """γσ(V) with the ζ-infimum taken inside each constraint; never above :meth:`g2`."""
        V, _, _ = self.split(x)
        return self.discount * sigma_batch(self.risk, V[self.support], self.probs).values

    def residuals(self, x: np.ndarray) -> np.ndarray:
        V, _, _ = self.split(x)
        return V[self.row_state] - self.g1(x) - self.tight_g2(x)

    def _check_convexity(self) -> None:
        # g2 must lie above its tangent planes at random pairs of points.
        rng = np.random.default_rng(self.check_seed)
        scale = 1.0 + float(np.abs(self.cost).max(initial=0.0)) / (1.0 - self.discount)
        for _ in range(self.convexity_checks):
            a = rng.uniform(-scale, scale, self.n_vars)
            b = rng.uniform(-scale, scale, self.n_vars)
            if self.has_zeta:
                a[-1] = max(abs(a[-1]), self.zeta_lower)
                b[-1] = max(abs(b[-1]), self.zeta_lower)
            exact = self.g2(b)
            plane = self.g2_tangent(a).values(b)
            if np.any(plane > exact + 1e-9 * (1.0 + np.abs(exact))):
                r = int(np.argmax(plane - exact))
                raise ValueError(
                    f"g2 failed a tangent-plane convexity check at (s={self.row_state[r]}, "
                    f"a={self.row_action[r]})"
                )


@dataclass
class Tangent:
    """Affine function ``constant[r] + <weights[r], V[support[r]]> + zeta_slope[r] * ζ`` per row."""

    program: DCPProgram
    weights: np.ndarray
    zeta_slope: np.ndarray
    constant: np.ndarray

    def values(self, x: np.ndarray) -> np.ndarray:
        V, _, zeta = self.program.split(x)
        linear = (self.weights * V[self.program.support]).sum(axis=1)
        return self.constant + linear + self.zeta_slope * zeta


@dataclass
class Linearization:
    """LP obtained by replacing each tight g2 by the tangent γ<q̂, V> at the iterate.

    Columns of ``lp``: V, λ, ζ (if present, pinned), then one slack per
    ``slack_rows`` entry.
    """

    lp: LinearProgram
    program: DCPProgram
    weights: np.ndarray
    slack_rows: np.ndarray
    tau: float

    def tangent_values(self, x: np.ndarray) -> np.ndarray:
        V, _, _ = self.program.split(x)
        return (self.weights * V[self.program.support]).sum(axis=1)

    def program_point(self, lp_x: np.ndarray) -> np.ndarray:
        return np.asarray(lp_x[: self.program.n_vars], dtype=float)


def linearize_g2(
    program: DCPProgram,
    iterate: np.ndarray,
    tau: float = 1.0,
    *,
    slack_rows: np.ndarray | None = None,
) -> Linearization:
    """Replace every tight g2 by its tangent at ``iterate`` and add penalized slacks.

    The tangent is γ<q̂, V> with q̂ the maximizing weights of σ at V̂, which
    is the expansion of g2 at the per-row minimizing ζ, where the ζ-slope
    vanishes. It lies below the tight constraint, so every LP-feasible point
    is feasible for exact σ. ζ is pinned at the iterate's value.

    ``slack_rows`` selects the constraints that receive a slack (all by default).
    """
    x_hat = np.asarray(iterate, dtype=float)
    V, _, zeta = program.split(x_hat)
    if program.has_zeta and zeta <= 0.0:
        raise ValueError(f"iterate has non-positive zeta {zeta}")
    kind = program.risk.kind
    probs = program.probs
    n_rows = program.n_rows

    if kind == RiskKind.EXPECTATION:
        weights = program.discount * probs
    else:
        weights = program.discount * sigma_batch(program.risk, V[program.support], probs).weights
    bad = ~np.isfinite(weights).all(axis=1)
    if bad.any():
        r = int(np.flatnonzero(bad)[0])
        raise SubgradientError(int(program.row_state[r]), int(program.row_action[r]))

    slack_rows = (
        np.arange(n_rows) if slack_rows is None else np.asarray(slack_rows, dtype=np.int64)
    )
    n, k = program.n_states, program.n_constraints
    z = int(program.has_zeta)
    n_cols = n + k + z + slack_rows.size

    A = np.zeros((n_rows, n_cols))
    rows = np.arange(n_rows)
    A[rows, program.row_state] += 1.0
    np.add.at(A, (np.repeat(rows, program.support.shape[1]), program.support.ravel()), -weights.ravel())
    A[:, n : n + k] = -program.constraint_cost
    b = np.zeros(n_rows)
    if kind == RiskKind.EVAR:
        A[:, n + k] = -program.cost
    else:
        b += program.cost
    A[slack_rows, n + k + z + np.arange(slack_rows.size)] = -1.0

    c = np.concatenate(
        [-program.kappa0, program.budgets, np.zeros(z), np.full(slack_rows.size, tau)]
    )
    lower = np.concatenate(
        [np.full(n, -np.inf), np.zeros(k), np.zeros(z), np.zeros(slack_rows.size)]
    )
    upper = np.full(n_cols, np.inf)
    if z:
        lower[n + k] = upper[n + k] = zeta

    return Linearization(
        lp=LinearProgram(c=c, A_ub=A, b_ub=b, lower=lower, upper=upper),
        program=program,
        weights=weights,
        slack_rows=slack_rows,
        tau=tau,
    )
