"""Dense strictly convex QP by a primal active-set method.

Solves::

    min  0.5 d'Bd + g'd
    s.t. A_eq d  = b_eq
         A_in d <= b_in

Multipliers follow ``B d + g + A_eq' lam + A_in' mu = 0`` with ``mu >= 0``.
A feasible start comes from the minimum-norm equality solution when that
already satisfies the inequalities, otherwise from an LP (HiGHS).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from fpsqp.errors import ShapeError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"


def _rows(a, n):
    a = np.zeros((0, n)) if a is None else np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        a = a.reshape(0, n)
    return a


def _vec(b, p):
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float).reshape(-1)
    if b.shape[0] != p:
        raise ShapeError(f"right-hand side has {b.shape[0]} entries, expected {p}")
    return b


@dataclass(frozen=True, eq=False)
class QpProblem:
    B: np.ndarray
    g: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    A_in: np.ndarray = None
    b_in: np.ndarray = None

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ShapeError(f"B must be square, got {B.shape}")
        n = B.shape[0]
        g = np.asarray(self.g, dtype=float).reshape(-1)
        if g.shape[0] != n:
            raise ShapeError(f"g has {g.shape[0]} entries, expected {n}")
        A_eq = _rows(self.A_eq, n)
        A_in = _rows(self.A_in, n)
        for name, a in (("A_eq", A_eq), ("A_in", A_in)):
            if a.shape[1] != n:
                raise ShapeError(f"{name} has {a.shape[1]} columns, expected {n}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "A_eq", A_eq)
        object.__setattr__(self, "A_in", A_in)
        object.__setattr__(self, "b_eq", _vec(self.b_eq, A_eq.shape[0]))
        object.__setattr__(self, "b_in", _vec(self.b_in, A_in.shape[0]))

    @property
    def n(self) -> int:
        return self.B.shape[0]

    def objective(self, d) -> float:
        d = np.asarray(d, dtype=float)
        return 0.5 * d @ self.B @ d + self.g @ d


@dataclass(frozen=True, eq=False)
class QpSolution:
    d: np.ndarray
    lambda_qp: np.ndarray
    mu_qp: np.ndarray
    kkt_residual: float
    status: str
    iterations: int = 0
    active: tuple = field(default=())


def kkt_residual(qp: QpProblem, sol: QpSolution) -> float:
    """Largest of the stationarity, feasibility and complementarity errors."""
    d, lam, mu = sol.d, sol.lambda_qp, sol.mu_qp
    stat = qp.B @ d + qp.g + qp.A_eq.T @ lam + qp.A_in.T @ mu
    parts = [np.max(np.abs(stat), initial=0.0)]
    parts.append(np.max(np.abs(qp.A_eq @ d - qp.b_eq), initial=0.0))
    slack = qp.A_in @ d - qp.b_in
    parts.append(np.max(np.maximum(slack, 0.0), initial=0.0))
    parts.append(np.max(np.maximum(-mu, 0.0), initial=0.0))
    parts.append(np.max(np.abs(mu * slack), initial=0.0))
    return float(max(parts))


def _kkt_solve(B, C, rhs_top):
    n, k = B.shape[0], C.shape[0]
    K = np.zeros((n + k, n + k))
    K[:n, :n] = B
    K[:n, n:] = C.T
    K[n:, :n] = C
    rhs = np.concatenate([rhs_top, np.zeros(k)])
    try:
        lu = scipy.linalg.lu_factor(K, check_finite=False)
        sol = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
        sol += scipy.linalg.lu_solve(lu, rhs - K @ sol, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    if not np.all(np.isfinite(sol)):
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def _independent(rows: np.ndarray, candidate: np.ndarray) -> bool:
    if rows.shape[0] == 0:
        return bool(np.linalg.norm(candidate) > 0)
    if rows.shape[0] >= rows.shape[1]:
        return False
    stacked = np.vstack([rows, candidate])
    s = np.linalg.svd(stacked, compute_uv=False)
    return bool(s[-1] > 1e-10 * s[0])


def _phase_one(qp: QpProblem, tol: float):
    """A point satisfying all constraints, or ``None`` if there is none."""
    n = qp.n
    if qp.A_eq.shape[0]:
        d = np.linalg.lstsq(qp.A_eq, qp.b_eq, rcond=None)[0]
        if np.max(np.abs(qp.A_eq @ d - qp.b_eq)) > tol * (1.0 + np.max(np.abs(qp.b_eq))):
            return None
    else:
        d = np.zeros(n)
    if qp.A_in.shape[0] == 0 or np.all(qp.A_in @ d - qp.b_in <= 0.0):
        return d
    res = linprog(
        np.zeros(n),
        A_ub=qp.A_in,
        b_ub=qp.b_in,
        A_eq=qp.A_eq if qp.A_eq.shape[0] else None,
        b_eq=qp.b_eq if qp.A_eq.shape[0] else None,
        bounds=[(None, None)] * n,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "presolve": False},
    )
    if res.status == 2 or res.x is None:
        return None
    return np.asarray(res.x, dtype=float)


def solve_qp(qp: QpProblem, tol: float = 1e-9, max_iter: int | None = None) -> QpSolution:
    """Primal active-set solve; ``B`` must be positive definite.

    Ties among constraints to add or drop go to the smallest index. After
    a run of degenerate (zero-length) steps the drop rule switches to
    Bland's smallest-index rule so the method cannot cycle.
    """
    n, p_eq, p_in = qp.n, qp.A_eq.shape[0], qp.A_in.shape[0]
    if max_iter is None:
        max_iter = 50 * (n + p_eq + p_in)

    d = _phase_one(qp, tol)
    if d is None:
        empty = QpSolution(np.zeros(n), np.zeros(p_eq), np.zeros(p_in), np.inf, INFEASIBLE)
        return empty

    # initial working set: constraints tight at the start, kept independent
    base = qp.A_eq.copy()
    working: list[int] = []
    if p_in:
        slack = qp.A_in @ d - qp.b_in
        scale = 1.0 + np.abs(qp.b_in)
        for i in np.flatnonzero(np.abs(slack) <= 1e-9 * scale):
            if _independent(base, qp.A_in[i]):
                base = np.vstack([base, qp.A_in[i]])
                working.append(int(i))
        if working or p_eq:
            # land exactly on the working constraints
            C = np.vstack([qp.A_eq, qp.A_in[working]])
            rhs = np.concatenate([qp.b_eq, qp.b_in[working]])
            d = d + np.linalg.lstsq(C, rhs - C @ d, rcond=None)[0]

    degenerate = 0
    bland = False
    status = MAX_ITER
    lam = np.zeros(p_eq)
    mu_w = np.zeros(0)
    it = 0
    at_minimizer = False
    for it in range(1, max_iter + 1):
        working.sort()
        if not at_minimizer:
            C = np.vstack([qp.A_eq, qp.A_in[working]]) if working else qp.A_eq
            grad = qp.B @ d + qp.g
            step, nu = _kkt_solve(qp.B, C, -grad)
            lam, mu_w = nu[:p_eq], nu[p_eq:]
            small = np.max(np.abs(step), initial=0.0) <= 1e-12 * (
                1.0 + np.max(np.abs(d), initial=0.0)
            )
        if at_minimizer or small:
            # d minimizes over the working set; nu holds its multipliers
            at_minimizer = False
            negative = [k for k, m in enumerate(mu_w) if m < -tol]
            if not negative:
                status = OPTIMAL
                break
            if bland:
                drop = negative[0]
            else:
                drop = min(negative, key=lambda k: (mu_w[k], k))
            working.pop(drop)
            continue

        alpha, block = 1.0, None
        if p_in:
            ap = qp.A_in @ step
            room = qp.b_in - qp.A_in @ d
            in_w = np.zeros(p_in, dtype=bool)
            in_w[working] = True
            cand = np.flatnonzero(~in_w & (ap > 1e-14 * (1.0 + np.linalg.norm(step))))
            if cand.size:
                ratios = np.maximum(room[cand], 0.0) / ap[cand]
                k = int(np.argmin(ratios))
                if ratios[k] < 1.0:
                    alpha, block = float(ratios[k]), int(cand[k])
        d = d + alpha * step
        if block is not None:
            working.append(block)
        else:
            at_minimizer = True
        if alpha <= 1e-14:
            degenerate += 1
            if degenerate > n + p_in:
                bland = True
        else:
            degenerate = 0

    mu = np.zeros(p_in)
    if status == OPTIMAL:
        mu[working] = mu_w
    sol = QpSolution(d, lam, mu, 0.0, status, it, tuple(working))
    res = kkt_residual(qp, sol)
    return QpSolution(d, lam, mu, res, status, it, tuple(working))
