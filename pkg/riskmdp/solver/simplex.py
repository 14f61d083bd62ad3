"""Dense revised simplex for small and medium linear programs.

Two-phase method on ``A z = b, z >= 0`` with Dantzig pricing and a Bland
fallback after a run of degenerate pivots. ``B^-1`` is kept explicitly,
updated by rank-one eta steps and refactorized every ``REFACTOR_EVERY``
pivots and before optimality is declared.

General programs (:class:`LinearProgram`) are normalized to that form either
directly (the primal path) or through their dual (the dual path, chosen for
inequality-only programs with many more rows than columns, such as the
Bellman-inequality LPs with |S||A| rows and |S| + n_c columns).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from riskmdp.solver.types import LinearProgram, LPBasis, LPResiduals, LPSolution, LPStatus

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
REFACTOR_EVERY = 100
DEGENERATE_RUN = 50
NUMERICAL_TOL = 1e-6
GAP_TOL = 1e-7


class _Outcome:
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"
    LIMIT = "iteration_limit"
    SINGULAR = "singular"


class RevisedSimplex:
    """min c @ z  s.t.  A z = b, z >= 0, started from a primal feasible basis."""

    def __init__(
        self,
        A: np.ndarray,
        b: np.ndarray,
        c: np.ndarray,
        basis: np.ndarray,
        max_iterations: int,
    ):
        self.A = A
        self.b = b
        self.c = c
        self.basis = np.asarray(basis, dtype=np.int64).copy()
        self.max_iterations = max_iterations
        self.iterations = 0
        self.ray: np.ndarray | None = None
        self._cost_tol = COST_TOL * max(1.0, float(np.abs(c).max(initial=0.0)))
        self.refactor()

    def refactor(self) -> None:
        self.B_inv = np.linalg.inv(self.A[:, self.basis])
        x_B = self.B_inv @ self.b
        x_B[(x_B < 0.0) & (x_B > -PIVOT_TOL)] = 0.0
        self.x_B = x_B
        self._since_refactor = 0

    @property
    def objective(self) -> float:
        return float(self.c[self.basis] @ self.x_B)

    def multipliers(self) -> np.ndarray:
        return self.c[self.basis] @ self.B_inv

    def reduced_costs(self) -> np.ndarray:
        d = self.c - self.multipliers() @ self.A
        d[self.basis] = 0.0
        return d

    def solution(self) -> np.ndarray:
        z = np.zeros(self.A.shape[1])
        z[self.basis] = np.maximum(self.x_B, 0.0)
        return z

    def pivot(self, r: int, q: int, w: np.ndarray) -> None:
        theta = self.x_B[r] / w[r]
        self.x_B -= theta * w
        self.x_B[r] = theta
        row = self.B_inv[r] / w[r]
        self.B_inv -= np.outer(w, row)
        self.B_inv[r] = row
        self.basis[r] = q
        self.iterations += 1
        self._since_refactor += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def run(self) -> str:
        degenerate = 0
        while True:
            if self.iterations >= self.max_iterations:
                return _Outcome.LIMIT
            d = self.reduced_costs()
            entering = np.flatnonzero(d < -self._cost_tol)
            if entering.size == 0:
                if self._since_refactor == 0:
                    return _Outcome.OPTIMAL
                self.refactor()
                continue

            bland = degenerate >= DEGENERATE_RUN
            q = int(entering[0] if bland else entering[np.argmin(d[entering])])
            w = self.B_inv @ self.A[:, q]
            rows = np.flatnonzero(w > PIVOT_TOL)
            if rows.size == 0:
                ray = np.zeros(self.A.shape[1])
                ray[self.basis] = -w
                ray[q] = 1.0
                self.ray = ray
                return _Outcome.UNBOUNDED

            ratios = self.x_B[rows] / w[rows]
            theta = ratios.min()
            ties = rows[ratios <= theta + 1e-12 * max(1.0, abs(theta))]
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(w[ties])])
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            self.pivot(r, q, w)


@dataclass
class _StandardResult:
    outcome: str
    z: np.ndarray | None = None
    # Row multipliers in the caller's row orientation; zero on dropped rows.
    pi: np.ndarray | None = None
    ray: np.ndarray | None = None
    farkas: np.ndarray | None = None
    basis: np.ndarray | None = None
    iterations: int = 0


def _unit_basis(A: np.ndarray) -> np.ndarray:
    """Basis position per row filled by an identity column of A, -1 if none."""
    m = A.shape[0]
    basis = np.full(m, -1, dtype=np.int64)
    nonzero = A != 0.0
    for j in np.flatnonzero(nonzero.sum(axis=0) == 1):
        i = int(np.argmax(nonzero[:, j]))
        if A[i, j] == 1.0 and basis[i] < 0:
            basis[i] = j
    return basis


def solve_standard_form(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    warm_basis: np.ndarray | None = None,
    max_iterations: int | None = None,
) -> _StandardResult:
    """min c @ z  s.t.  A z = b, z >= 0 (any sign of b)."""
    m, n = A.shape
    max_iterations = max_iterations or 50 * (m + n) + 1000
    sign = np.where(b < 0.0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign

    if m == 0:
        if np.any(c < -COST_TOL):
            j = int(np.argmin(c))
            ray = np.zeros(n)
            ray[j] = 1.0
            return _StandardResult(_Outcome.UNBOUNDED, ray=ray)
        return _StandardResult(
            _Outcome.OPTIMAL, z=np.zeros(n), pi=np.zeros(0), basis=np.zeros(0, np.int64)
        )

    iterations = 0
    keep = np.ones(m, dtype=bool)
    basis = None
    if warm_basis is not None and warm_basis.size == m:
        try:
            B_inv = np.linalg.inv(A[:, warm_basis])
            if np.all(B_inv @ b >= -1e-9):
                basis = warm_basis
        except np.linalg.LinAlgError:
            basis = None

    if basis is None:
        basis = _unit_basis(A)
        missing = np.flatnonzero(basis < 0)
        if missing.size:
            artificial = np.zeros((m, missing.size))
            artificial[missing, np.arange(missing.size)] = 1.0
            A1 = np.hstack([A, artificial])
            c1 = np.concatenate([np.zeros(n), np.ones(missing.size)])
            basis[missing] = n + np.arange(missing.size)
            try:
                phase1 = RevisedSimplex(A1, b, c1, basis, max_iterations)
                outcome = phase1.run()
            except np.linalg.LinAlgError:
                return _StandardResult(_Outcome.SINGULAR)
            iterations += phase1.iterations
            if outcome == _Outcome.LIMIT:
                return _StandardResult(_Outcome.LIMIT, iterations=iterations)
            if phase1.objective > 1e-8 * (1.0 + float(b.max(initial=0.0))):
                return _StandardResult(
                    _Outcome.INFEASIBLE,
                    farkas=phase1.multipliers() * sign,
                    iterations=iterations,
                )
            basis, keep = _drive_out_artificials(phase1, n)

    A2, b2 = A[keep], b[keep]
    try:
        phase2 = RevisedSimplex(A2, b2, c, basis, max_iterations - iterations)
        outcome = phase2.run()
    except np.linalg.LinAlgError:
        return _StandardResult(_Outcome.SINGULAR, iterations=iterations)
    iterations += phase2.iterations
    if outcome == _Outcome.UNBOUNDED:
        return _StandardResult(outcome, ray=phase2.ray, iterations=iterations)
    if outcome != _Outcome.OPTIMAL:
        return _StandardResult(outcome, iterations=iterations)

    pi = np.zeros(m)
    pi[keep] = phase2.multipliers()
    return _StandardResult(
        _Outcome.OPTIMAL,
        z=phase2.solution(),
        pi=pi * sign,
        basis=phase2.basis.copy() if keep.all() else None,
        iterations=iterations,
    )


def _drive_out_artificials(phase1: RevisedSimplex, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pivot zero-level artificials out of the basis; drop rows that are redundant."""
    m = phase1.A.shape[0]
    keep = np.ones(m, dtype=bool)
    redundant_positions = []
    for r in range(m):
        if phase1.basis[r] < n:
            continue
        row = phase1.B_inv[r] @ phase1.A[:, :n]
        row[phase1.basis[phase1.basis < n]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > PIVOT_TOL:
            phase1.pivot(r, j, phase1.B_inv @ phase1.A[:, j])
        else:
            # The artificial is the unit column of its own row.
            keep[int(np.argmax(phase1.A[:, phase1.basis[r]]))] = False
            redundant_positions.append(r)
    positions = np.setdiff1d(np.arange(m), redundant_positions)
    return phase1.basis[positions].copy(), keep


@dataclass
class _Normalized:
    """``x = offset + scatter(sign * z)`` with z >= 0 except on ``free`` columns."""

    c: np.ndarray
    constant: float
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    free: np.ndarray
    columns: np.ndarray
    sign: np.ndarray
    offset: np.ndarray
    n_ub: int

    def to_x(self, z: np.ndarray) -> np.ndarray:
        x = self.offset.copy()
        x[self.columns] += self.sign * z
        return x

    def direction(self, z: np.ndarray) -> np.ndarray:
        x = np.zeros_like(self.offset)
        x[self.columns] = self.sign * z
        return x


def _normalize(lp: LinearProgram) -> _Normalized:
    lower, upper = lp.lower, lp.upper
    fixed = lower == upper
    has_lower = np.isfinite(lower)
    has_upper = np.isfinite(upper)
    offset = np.where(fixed | has_lower, lower, np.where(has_upper, upper, 0.0))
    columns = np.flatnonzero(~fixed)
    sign = np.where(~has_lower[columns] & has_upper[columns], -1.0, 1.0)
    free = ~has_lower[columns] & ~has_upper[columns]

    A_ub = lp.A_ub[:, columns] * sign
    b_ub = lp.b_ub - lp.A_ub @ offset
    boxed = np.flatnonzero(has_lower[columns] & has_upper[columns])
    if boxed.size:
        bound_rows = np.zeros((boxed.size, columns.size))
        bound_rows[np.arange(boxed.size), boxed] = 1.0
        A_ub = np.vstack([A_ub, bound_rows])
        b_ub = np.concatenate([b_ub, (upper - lower)[columns[boxed]]])
    return _Normalized(
        c=lp.c[columns] * sign,
        constant=float(lp.c @ offset),
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=lp.A_eq[:, columns] * sign,
        b_eq=lp.b_eq - lp.A_eq @ offset,
        free=free,
        columns=columns,
        sign=sign,
        offset=offset,
        n_ub=lp.A_ub.shape[0],
    )


def _primal_path(norm: _Normalized, warm: LPBasis | None) -> tuple[str, dict]:
    k = norm.c.size
    m_ub, m_eq = norm.A_ub.shape[0], norm.A_eq.shape[0]
    free = np.flatnonzero(norm.free)
    # columns: z (k), -z on free columns, slacks on ub rows
    A = np.zeros((m_ub + m_eq, k + free.size + m_ub))
    A[:m_ub, :k] = norm.A_ub
    A[m_ub:, :k] = norm.A_eq
    A[:m_ub, k : k + free.size] = -norm.A_ub[:, free]
    A[m_ub:, k : k + free.size] = -norm.A_eq[:, free]
    A[np.arange(m_ub), k + free.size + np.arange(m_ub)] = 1.0
    b = np.concatenate([norm.b_ub, norm.b_eq])
    c = np.concatenate([norm.c, -norm.c[free], np.zeros(m_ub)])

    warm_columns = _warm_columns(warm, "primal", A.shape)
    result = solve_standard_form(A, b, c, warm_columns)
    info = {"iterations": result.iterations, "shape": A.shape}
    if result.outcome == _Outcome.OPTIMAL:
        z = result.z[:k].copy()
        z[free] -= result.z[k : k + free.size]
        info.update(
            z=z,
            y_ub=-result.pi[:m_ub],
            y_eq=-result.pi[m_ub:],
            basis=result.basis,
        )
    elif result.outcome == _Outcome.UNBOUNDED:
        ray = result.ray[:k].copy()
        ray[free] -= result.ray[k : k + free.size]
        info["ray"] = ray
    elif result.outcome == _Outcome.INFEASIBLE:
        info["farkas"] = result.farkas
    return result.outcome, info


def _dual_path(norm: _Normalized, warm: LPBasis | None) -> tuple[str, dict]:
    """Solve min b @ y s.t. -A^T y (+ t on sign-constrained columns) = c, y, t >= 0."""
    m, k = norm.A_ub.shape
    nonneg = np.flatnonzero(~norm.free)
    D = np.zeros((k, m + nonneg.size))
    D[:, :m] = -norm.A_ub.T
    D[nonneg, m + np.arange(nonneg.size)] = 1.0
    cost = np.concatenate([norm.b_ub, np.zeros(nonneg.size)])

    warm_columns = _warm_columns(warm, "dual", D.shape)
    result = solve_standard_form(D, norm.c, cost, warm_columns)
    info = {"iterations": result.iterations, "shape": D.shape}
    if result.outcome == _Outcome.OPTIMAL:
        info.update(
            z=-result.pi,
            y_ub=result.z[:m],
            y_eq=np.zeros(0),
            basis=result.basis,
        )
        return _Outcome.OPTIMAL, info
    if result.outcome == _Outcome.INFEASIBLE:
        # Phase-1 multipliers give u with A u <= 0, u >= 0 off free columns, c @ u < 0.
        ray = -result.farkas
        info["ray"] = ray
        if np.all(norm.b_ub >= -1e-12):
            return _Outcome.UNBOUNDED, info
        return "fallback", info
    if result.outcome == _Outcome.UNBOUNDED:
        info["farkas"] = result.ray[:m]
        return _Outcome.INFEASIBLE, info
    return result.outcome, info


def _warm_columns(warm: LPBasis | None, path: str, shape: tuple[int, int]) -> np.ndarray | None:
    if warm is None or warm.path != path or tuple(warm.shape) != tuple(shape):
        return None
    return np.asarray(warm.columns, dtype=np.int64)


def lp_residuals(
    lp: LinearProgram, x: np.ndarray, y_ub: np.ndarray, y_eq: np.ndarray
) -> LPResiduals:
    """Primal/dual feasibility, duality gap and complementarity of a primal-dual pair.

    Duals follow ``L = c x + y_ub (A_ub x - b_ub) + y_eq (A_eq x - b_eq)`` with
    ``y_ub >= 0``; bound multipliers are implied by the reduced costs.
    """
    slack_ub = lp.b_ub - lp.A_ub @ x
    primal = max(
        float(np.max(-slack_ub, initial=0.0)),
        float(np.max(np.abs(lp.A_eq @ x - lp.b_eq), initial=0.0)),
        float(np.max(lp.lower - x, initial=0.0)),
        float(np.max(x - lp.upper, initial=0.0)),
    )
    r = lp.c + lp.A_ub.T @ y_ub + lp.A_eq.T @ y_eq
    has_lower = np.isfinite(lp.lower)
    has_upper = np.isfinite(lp.upper)
    viol = np.where(
        has_lower & has_upper,
        0.0,
        np.where(
            has_lower,
            np.maximum(-r, 0.0),
            np.where(has_upper, np.maximum(r, 0.0), np.abs(r)),
        ),
    )
    dual = max(float(viol.max(initial=0.0)), float(np.max(-y_ub, initial=0.0)))

    bound = np.where(r > 0.0, lp.lower, lp.upper)
    bound = np.where(np.isfinite(bound), bound, x)
    dual_objective = float(-lp.b_ub @ y_ub - lp.b_eq @ y_eq + r @ bound)
    gap = abs(lp.objective(x) - dual_objective)
    complementarity = max(
        float(np.max(np.abs(y_ub * slack_ub), initial=0.0)),
        float(np.max(np.abs(r * (x - bound)), initial=0.0)),
    )
    return LPResiduals(primal=primal, dual=dual, gap=gap, complementarity=complementarity)


def solve_lp(
    lp: LinearProgram, method: str = "auto", warm_basis: LPBasis | None = None
) -> LPSolution:
    """Solve a :class:`LinearProgram`.

    ``method`` is ``"primal"``, ``"dual"`` or ``"auto"``; the dual path applies
    only to inequality-only programs. Numerical trouble (singular bases,
    iteration limits, residuals above tolerance) is reported as
    ``LPStatus.NUMERICAL_FAILURE``.
    """
    norm = _normalize(lp)
    k = norm.c.size
    if k == 0:
        return _fixed_point_solution(lp, norm)

    m = norm.A_ub.shape[0]
    use_dual = method == "dual" or (method == "auto" and m > 2 * k)
    if norm.A_eq.shape[0]:
        use_dual = False

    path = "dual" if use_dual else "primal"
    if use_dual:
        outcome, info = _dual_path(norm, warm_basis)
        if outcome == "fallback":
            logger.debug("dual path inconclusive, falling back to the primal path")
            path = "primal"
            outcome, info = _primal_path(norm, None)
    else:
        outcome, info = _primal_path(norm, warm_basis)

    iterations = info.get("iterations", 0)
    if outcome == _Outcome.OPTIMAL:
        x = norm.to_x(info["z"])
        y_ub = np.maximum(info["y_ub"][: norm.n_ub], 0.0)
        y_eq = info["y_eq"]
        residuals = lp_residuals(lp, x, y_ub, y_eq)
        basis = info.get("basis")
        solution = LPSolution(
            status=LPStatus.OPTIMAL,
            x=x,
            objective=lp.objective(x),
            ub_duals=y_ub,
            eq_duals=y_eq,
            residuals=residuals,
            iterations=iterations,
            basis=(
                LPBasis(path=path, columns=tuple(int(j) for j in basis), shape=info["shape"])
                if basis is not None
                else None
            ),
        )
        scale = 1.0 + max(
            float(np.abs(lp.b_ub).max(initial=0.0)),
            float(np.abs(lp.b_eq).max(initial=0.0)),
            float(np.abs(lp.c).max(initial=0.0)),
        )
        if (
            residuals.primal > NUMERICAL_TOL * scale
            or residuals.dual > NUMERICAL_TOL * scale
            or residuals.gap > GAP_TOL * (scale + abs(solution.objective))
        ):
            solution.status = LPStatus.NUMERICAL_FAILURE
            solution.message = (
                f"residuals above tolerance (primal {residuals.primal:.3e}, "
                f"dual {residuals.dual:.3e}, gap {residuals.gap:.3e})"
            )
        return solution
    if outcome == _Outcome.UNBOUNDED:
        return LPSolution(
            status=LPStatus.UNBOUNDED,
            ray=norm.direction(info["ray"]),
            iterations=iterations,
            message="objective unbounded below",
        )
    if outcome == _Outcome.INFEASIBLE:
        return LPSolution(
            status=LPStatus.INFEASIBLE,
            ray=info.get("farkas"),
            iterations=iterations,
            message="constraints are inconsistent",
        )
    return LPSolution(
        status=LPStatus.NUMERICAL_FAILURE,
        iterations=iterations,
        message=f"simplex stopped: {outcome}",
    )


def _fixed_point_solution(lp: LinearProgram, norm: _Normalized) -> LPSolution:
    x = norm.offset.copy()
    residuals = lp_residuals(lp, x, np.zeros(lp.A_ub.shape[0]), np.zeros(lp.A_eq.shape[0]))
    if residuals.primal > 1e-9:
        return LPSolution(status=LPStatus.INFEASIBLE, message="fixed variables violate constraints")
    return LPSolution(
        status=LPStatus.OPTIMAL,
        x=x,
        objective=lp.objective(x),
        ub_duals=np.zeros(lp.A_ub.shape[0]),
        eq_duals=np.zeros(lp.A_eq.shape[0]),
        residuals=residuals,
    )
