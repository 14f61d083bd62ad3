"""One-step risk transition mappings σ(v, p) and their subgradients.

All three measures are evaluated row-wise on padded ``(R, K)`` arrays so that
the planner can price every (state, action) pair in one call. The scalar
entry points are thin wrappers over :func:`sigma_batch`.

The subgradients are the maximizing weights of each measure's dual
representation (re-weighted probabilities), so ``σ(v') >= <w, v'>`` holds
for every ``v'`` with equality at ``v``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from riskmdp.errors import RiskMeasureError
from riskmdp.mdp.types import DiscreteDistribution
from riskmdp.risk.types import RiskKind, RiskMeasure, SigmaBatch, SigmaResult

ZETA_MIN = 1e-8
ZETA_MAX = 1e6
_ROOT_TOL = 1e-12
_MAX_NEWTON = 200


def _prepare(values: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = np.atleast_2d(np.asarray(values, dtype=float))
    p = np.atleast_2d(np.asarray(probs, dtype=float))
    if v.shape != p.shape:
        raise RiskMeasureError(f"values {v.shape} and probabilities {p.shape} differ")
    if not np.all(np.isfinite(v)):
        raise RiskMeasureError("values must be finite")
    if np.any(p < 0.0) or not np.all(np.isfinite(p)):
        raise RiskMeasureError("probabilities must be non-negative and finite")
    mask = p > 0.0
    if not mask.any(axis=1).all():
        raise RiskMeasureError("every distribution needs a positive-probability atom")
    # Padded slots take the row maximum so they never change sorting or shifts.
    vmax = np.where(mask, v, -np.inf).max(axis=1)
    v = np.where(mask, v, vmax[:, None])
    return v, p


def _expectation(v: np.ndarray, p: np.ndarray) -> SigmaBatch:
    return SigmaBatch(
        values=(p * v).sum(axis=1),
        weights=p.copy(),
        zeta=np.full(v.shape[0], np.nan),
    )


def _cvar_zeta(v: np.ndarray, p: np.ndarray, eps: float) -> np.ndarray:
    """Smallest minimizer of ζ + (1/ε) E[(v - ζ)+]: the lowest atom a with P(v > a) <= ε."""
    above = (v[:, None, :] > v[:, :, None]) * p[:, None, :]
    tail = above.sum(axis=2)
    candidate = (p > 0.0) & (tail <= eps + _ROOT_TOL)
    return np.where(candidate, v, np.inf).min(axis=1)


def _cvar(v: np.ndarray, p: np.ndarray, eps: float) -> SigmaBatch:
    zeta = _cvar_zeta(v, p, eps)
    if eps >= 1.0:
        base = _expectation(v, p)
        return SigmaBatch(values=base.values, weights=base.weights, zeta=zeta)

    order = np.argsort(-v, axis=1, kind="stable")
    p_sorted = np.take_along_axis(p, order, axis=1)
    before = np.cumsum(p_sorted, axis=1) - p_sorted
    w_sorted = np.minimum(p_sorted, np.maximum(0.0, eps - before)) / eps
    weights = np.empty_like(w_sorted)
    np.put_along_axis(weights, order, w_sorted, axis=1)
    return SigmaBatch(values=(weights * v).sum(axis=1), weights=weights, zeta=zeta)


def _tilt(d: np.ndarray, p: np.ndarray, zeta: np.ndarray):
    """Log-moment L(ζ), tilted weights q, and g(ζ) = ζ E_q[d] - L(ζ) for shifted values d <= 0."""
    a = zeta[:, None] * d
    log_mgf = logsumexp(a, b=p, axis=1)
    q = p * np.exp(a - log_mgf[:, None])
    mean = (q * d).sum(axis=1)
    var = (q * (d - mean[:, None]) ** 2).sum(axis=1)
    return log_mgf, q, zeta * mean - log_mgf, var


def _evar_root(d: np.ndarray, p: np.ndarray, u: float) -> np.ndarray:
    """Solve g(ζ) = u on [ZETA_MIN, ZETA_MAX], Newton in log ζ with a bisection bracket.

    g is increasing (dg/d log ζ = ζ² Var_q), so the EVaR objective is
    stationary exactly where g crosses u = log(1/ε).
    """
    n = d.shape[0]
    lo = np.full(n, np.log(ZETA_MIN))
    hi = np.full(n, np.log(ZETA_MAX))

    _, _, g_hi, _ = _tilt(d, p, np.exp(hi))
    _, _, g_lo, _ = _tilt(d, p, np.exp(lo))
    capped_hi = g_hi < u
    capped_lo = g_lo > u

    mean_p = (p * d).sum(axis=1)
    var_p = (p * (d - mean_p[:, None]) ** 2).sum(axis=1)
    with np.errstate(divide="ignore"):
        t = np.log(np.sqrt(2.0 * u / np.maximum(var_p, 1e-300)))
    t = np.clip(t, lo, hi)
    done = capped_hi | capped_lo
    t = np.where(capped_hi, hi, np.where(capped_lo, lo, t))

    for _ in range(_MAX_NEWTON):
        if done.all():
            break
        zeta = np.exp(t)
        _, _, g, var = _tilt(d, p, zeta)
        resid = g - u
        converged = np.abs(resid) <= _ROOT_TOL * max(1.0, u)
        hi = np.where(~done & (resid > 0.0), t, hi)
        lo = np.where(~done & (resid <= 0.0), t, lo)
        slope = zeta * zeta * var
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t - resid / slope
        inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
        step = np.where(inside, newton, 0.5 * (lo + hi))
        done = done | converged | (hi - lo < 1e-14)
        t = np.where(done, t, step)
    return np.exp(t)


def _evar(v: np.ndarray, p: np.ndarray, eps: float) -> SigmaBatch:
    n = v.shape[0]
    if eps >= 1.0:
        # log E[e^{ζv}] / ζ decreases to the mean as ζ -> 0.
        base = _expectation(v, p)
        return SigmaBatch(values=base.values, weights=base.weights, zeta=np.full(n, ZETA_MIN))

    mask = p > 0.0
    vmax = v.max(axis=1)
    d = v - vmax[:, None]
    spread = -np.where(mask, d, 0.0).min(axis=1)
    top = mask & (d == 0.0)
    p_top = np.where(top, p, 0.0).sum(axis=1)

    values = vmax.copy()
    weights = p.copy()
    zeta = np.full(n, ZETA_MAX)

    # ε <= P(v = max v): the infimum is approached as ζ -> ∞ and equals max v.
    at_top = (spread > 0.0) & (eps <= p_top)
    if at_top.any():
        weights[at_top] = np.where(top[at_top], p[at_top], 0.0) / p_top[at_top, None]

    active = (spread > 0.0) & ~at_top
    if active.any():
        u = float(np.log(1.0 / eps))
        da, pa = d[active], p[active]
        z = _evar_root(da, pa, u)
        log_mgf, q, _, _ = _tilt(da, pa, z)
        values[active] = vmax[active] + (log_mgf + u) / z
        weights[active] = q
        zeta[active] = z
    return SigmaBatch(values=values, weights=weights, zeta=zeta)


def sigma_batch(measure: RiskMeasure, values: np.ndarray, probs: np.ndarray) -> SigmaBatch:
    """Evaluate σ on each row of padded ``(R, K)`` values/probabilities."""
    v, p = _prepare(values, probs)
    if measure.kind == RiskKind.EXPECTATION:
        return _expectation(v, p)
    if measure.kind == RiskKind.CVAR:
        return _cvar(v, p, measure.epsilon)
    if measure.kind == RiskKind.EVAR:
        return _evar(v, p, measure.epsilon)
    raise RiskMeasureError(f"unsupported risk measure {measure.kind!r}")


def sigma_rows(
    measure: RiskMeasure, V: np.ndarray, index: np.ndarray, probs: np.ndarray
) -> SigmaBatch:
    """σ(V, s, p(.|s, a)) for every row of a padded successor table."""
    return sigma_batch(measure, np.asarray(V, dtype=float)[index], probs)


def _single(measure: RiskMeasure, values, dist: DiscreteDistribution) -> SigmaResult:
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size != len(dist):
        raise RiskMeasureError(
            f"{v.size} values given for a distribution with {len(dist)} atoms"
        )
    batch = sigma_batch(measure, v[None, :], dist.probabilities[None, :])
    zeta = float(batch.zeta[0])
    return SigmaResult(
        value=float(batch.values[0]),
        subgradient=batch.weights[0],
        zeta_star=None if np.isnan(zeta) else zeta,
    )


def _checked_epsilon(epsilon: float) -> float:
    if not 0.0 < epsilon <= 1.0:
        raise RiskMeasureError(f"epsilon {epsilon} outside (0, 1]")
    return float(epsilon)


def expectation_sigma(values, dist: DiscreteDistribution) -> SigmaResult:
    return _single(RiskMeasure.expectation(), values, dist)


def cvar_sigma(values, dist: DiscreteDistribution, epsilon: float) -> SigmaResult:
    return _single(RiskMeasure.cvar(_checked_epsilon(epsilon)), values, dist)


def evar_sigma(values, dist: DiscreteDistribution, epsilon: float) -> SigmaResult:
    return _single(RiskMeasure.evar(_checked_epsilon(epsilon)), values, dist)


def sigma(measure: RiskMeasure, values, dist: DiscreteDistribution) -> SigmaResult:
    return _single(measure, values, dist)
