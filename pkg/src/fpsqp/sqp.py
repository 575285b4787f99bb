"""Feasible-path SQP driver.

Only ``x`` is iterated. At each iterate the surrogate supplies ``y = s(x)``
with its Jacobian and Hessians, every problem function is differentiated
through ``y`` by the chain rule, and a convex QP built from the
eigenvalue-clipped Lagrangian Hessian gives the step. Steps are accepted
by an Armijo test on the l1 merit function

    phi(x) = f + rho . |h| + nu . max(0, g)

with penalties ``rho = max(|lam|, (rho_prev + |lam|) / 2)`` (same for
``nu``). Sign conventions: minimize ``f`` subject to ``h = 0`` and
``g <= 0``; the Lagrangian is ``f + lam . h + mu . g`` with ``mu >= 0``.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from fpsqp.errors import ConfigurationError, DescentError, NumericError, ParseError, ShapeError
from fpsqp.qp import OPTIMAL, QpProblem, solve_qp
from fpsqp.surrogate import EvalTriple, surrogate_eval

CONVERGED_OBJECTIVE = "converged_feasible_objective"
CONVERGED_STEP = "converged_feasible_step"
CONTINUE = "continue"
MAX_ITER = "max_iter"
QP_FAILURE = "qp_failure"

CSV_HEADER = ["iter", "f", "merit", "step_norm", "alpha", "violation", "elapsed_ms"]


@dataclass(frozen=True)
class SolverOptions:
    eta: float = 0.1
    tol: float = 1e-6
    delta: float = 1e-6
    max_outer_iter: int = 200
    backtrack_ratio: float = 0.618
    max_backtracks: int = 10
    qp_tol: float = 1e-9
    descent_slack: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.eta < 0.5:
            raise ConfigurationError(f"eta must lie in (0, 0.5), got {self.eta}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if not self.delta > 0:
            raise ConfigurationError(f"delta must be positive, got {self.delta}")
        if not 0.0 < self.backtrack_ratio < 1.0:
            raise ConfigurationError(
                f"backtrack_ratio must lie in (0, 1), got {self.backtrack_ratio}"
            )
        if int(self.max_outer_iter) != self.max_outer_iter or self.max_outer_iter < 1:
            raise ConfigurationError("max_outer_iter must be a positive integer")
        if int(self.max_backtracks) != self.max_backtracks or self.max_backtracks < 0:
            raise ConfigurationError("max_backtracks must be a non-negative integer")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class SqpState:
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    rho: np.ndarray
    nu: np.ndarray
    H: np.ndarray | None = None
    B: np.ndarray | None = None
    iter: int = 0


@dataclass(frozen=True)
class IterationRecord:
    """One outer iteration; ``f``, ``merit`` and ``violation`` are at the new iterate."""

    iter: int
    f: float
    merit: float
    step_norm: float
    alpha: float
    violation: float
    elapsed_ms: float
    directional_derivative: float = 0.0
    accepted: bool = True
    hessian_modified: bool = False


@dataclass
class SolveReport:
    status: str
    x_final: np.ndarray
    y_final: np.ndarray
    f_final: float
    violation_final: float
    records: list = field(default_factory=list)
    message: str = ""
    solve_time_s: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status in (CONVERGED_OBJECTIVE, CONVERGED_STEP)


# chain rule -----------------------------------------------------------------


def total_gradient(p, triple: EvalTriple) -> np.ndarray:
    """``dF/dx + J' dF/dy`` for one scalar function."""
    return p.dx + triple.jacobian.T @ p.dy


def total_hessian(p, triple: EvalTriple) -> np.ndarray:
    """Second derivative of ``F(x, s(x))`` in ``x``."""
    if not p.has_second:
        raise ConfigurationError("problem function does not supply second partials")
    J = triple.jacobian
    cross = p.dxy @ J
    H = p.dxx + cross + cross.T + J.T @ p.dyy @ J
    H = H + np.tensordot(p.dy, triple.hessians, axes=1)
    return 0.5 * (H + H.T)


def lagrangian_hessian(problem, triple: EvalTriple, x, lam, mu) -> np.ndarray:
    """Hessian in ``x`` of ``f + lam . h + mu . g`` composed with ``y = s(x)``."""
    fp, hp, gp = problem.partials(x, triple.value)
    H = total_hessian(fp, triple)
    for w, p in zip(lam, hp):
        if w != 0.0:
            H = H + w * total_hessian(p, triple)
        elif not p.has_second:
            raise ConfigurationError("equality constraint does not supply second partials")
    for w, p in zip(mu, gp):
        if w != 0.0:
            H = H + w * total_hessian(p, triple)
        elif not p.has_second:
            raise ConfigurationError("inequality constraint does not supply second partials")
    return H


def modify_hessian(H, delta: float):
    """Raise every eigenvalue below ``delta`` to ``delta``.

    Returns ``(B, E)`` with ``B = H + E``. ``E`` is the smallest correction
    in Frobenius norm that gives ``B >= delta I``. If no eigenvalue needs
    clipping, ``B`` is ``H`` itself (copied) and ``E`` is zero.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeError(f"H must be square, got {H.shape}")
    if np.max(np.abs(H - H.T), initial=0.0) > 1e-10:
        raise ShapeError("H is not symmetric")
    sym = 0.5 * (H + H.T)
    sigma, Q = np.linalg.eigh(sym)
    tau = np.where(sigma < delta, delta - sigma, 0.0)
    if not np.any(tau > 0.0):
        return sym.copy(), np.zeros_like(sym)
    E = (Q * tau) @ Q.T
    B = (Q * (sigma + tau)) @ Q.T
    return 0.5 * (B + B.T), 0.5 * (E + E.T)


def assemble_qp(problem, triple: EvalTriple, x, B, include_bounds: bool = False) -> QpProblem:
    """Linearize at ``x``: rows ``grad h . d = -h`` and ``grad g . d <= -g``.

    With ``include_bounds`` the box ``lo - x <= d <= hi - x`` is appended
    after the ``g`` rows (finite sides only).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise ShapeError(f"x has shape {x.shape}, expected ({problem.n},)")
    if triple.jacobian is None or triple.jacobian.shape != (problem.m, problem.n):
        raise ShapeError(f"surrogate Jacobian must be ({problem.m}, {problem.n})")
    fp, hp, gp = problem.partials(x, triple.value)
    grad_f = total_gradient(fp, triple)
    n = problem.n
    A_eq = np.array([total_gradient(p, triple) for p in hp]).reshape(-1, n)
    b_eq = -np.array([p.value for p in hp])
    A_in = np.array([total_gradient(p, triple) for p in gp]).reshape(-1, n)
    b_in = -np.array([p.value for p in gp])
    if include_bounds and problem.x_bounds is not None:
        lo, hi = problem.x_bounds
        eye = np.eye(n)
        up = np.flatnonzero(np.isfinite(hi))
        down = np.flatnonzero(np.isfinite(lo))
        A_in = np.vstack([A_in, eye[up], -eye[down]])
        b_in = np.concatenate([b_in, hi[up] - x[up], x[down] - lo[down]])
    return QpProblem(B, grad_f, A_eq, b_eq, A_in, b_in)


# merit ----------------------------------------------------------------------


def violation(h, g) -> float:
    """``|h|_1 + |max(0, g)|_1``."""
    return float(np.sum(np.abs(h)) + np.sum(np.maximum(g, 0.0)))


def merit(problem, x, y, rho, nu) -> float:
    f, h, g = problem.values(x, y)
    return float(f + np.dot(rho, np.abs(h)) + np.dot(nu, np.maximum(g, 0.0)))


def merit_directional_derivative(problem, triple: EvalTriple, x, d, rho, nu) -> float:
    """``grad f . d - rho . |h| - nu . max(0, g)`` at ``x``."""
    fp, hp, gp = problem.partials(x, triple.value)
    h = np.array([p.value for p in hp])
    g = np.array([p.value for p in gp])
    return float(
        total_gradient(fp, triple) @ d - np.dot(rho, np.abs(h)) - np.dot(nu, np.maximum(g, 0.0))
    )


def update_penalties(rho_prev, nu_prev, lambda_qp, mu_qp):
    """Elementwise ``max(|m|, (prev + |m|) / 2)`` for both penalty vectors."""
    a_lam = np.abs(np.asarray(lambda_qp, dtype=float))
    a_mu = np.abs(np.asarray(mu_qp, dtype=float))
    rho = np.maximum(a_lam, 0.5 * (np.asarray(rho_prev, dtype=float) + a_lam))
    nu = np.maximum(a_mu, 0.5 * (np.asarray(nu_prev, dtype=float) + a_mu))
    return rho, nu


def line_search(problem, surrogate, x, d, rho, nu, D, opts: SolverOptions, merit0=None):
    """Backtrack ``alpha = 1, r, r^2, ...`` until the Armijo test passes.

    Returns ``(alpha, accepted)``. When ``max_backtracks`` reductions all
    fail, the last (smallest) ``alpha`` is returned with ``accepted=False``
    and the caller still takes that step.
    """
    if D > opts.descent_slack:
        raise DescentError(f"merit directional derivative is positive ({D:.3e})")
    x = np.asarray(x, dtype=float)
    if merit0 is None:
        merit0 = merit(problem, x, surrogate_eval(surrogate, x, 0).value, rho, nu)
    alpha = 1.0
    for k in range(opts.max_backtracks + 1):
        if k:
            alpha *= opts.backtrack_ratio
        xt = x + alpha * d
        yt = surrogate_eval(surrogate, xt, 0).value
        mt = merit(problem, xt, yt, rho, nu)
        if not math.isfinite(mt):
            raise NumericError(f"merit is not finite at trial point alpha={alpha:g}")
        if mt - merit0 < alpha * opts.eta * D:
            return alpha, True
    return alpha, False


def check_convergence(problem, x_new, y_new, f_old, d, tol) -> str:
    """Feasibility plus either a small objective change or a small step."""
    f_new, h, g = problem.values(x_new, y_new)
    if violation(h, g) >= tol:
        return CONTINUE
    if abs(f_new - f_old) < tol:
        return CONVERGED_OBJECTIVE
    if np.linalg.norm(d) < tol:
        return CONVERGED_STEP
    return CONTINUE


# driver ---------------------------------------------------------------------


def solve(problem, surrogate, x0, opts: SolverOptions | None = None) -> SolveReport:
    """Run the feasible-path SQP loop from ``x0``."""
    opts = opts or SolverOptions()
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (problem.n,):
        raise ShapeError(f"x0 has shape {x.shape}, expected ({problem.n},)")
    if surrogate.n_inputs != problem.n or surrogate.n_outputs != problem.m:
        raise ShapeError(
            f"surrogate maps {surrogate.n_inputs} -> {surrogate.n_outputs}, "
            f"problem expects {problem.n} -> {problem.m}"
        )
    if not problem.in_bounds(x):
        raise ConfigurationError("x0 lies outside the variable bounds")

    state = SqpState(
        x=x,
        y=np.zeros(problem.m),
        lam=np.zeros(problem.p_eq),
        mu=np.zeros(problem.p_in),
        rho=np.zeros(problem.p_eq),
        nu=np.zeros(problem.p_in),
    )
    records = []
    start = time.perf_counter()

    def report(status, message=""):
        triple = surrogate_eval(surrogate, state.x, 0)
        f, h, g = problem.values(state.x, triple.value)
        return SolveReport(
            status, state.x.copy(), triple.value.copy(), float(f), violation(h, g),
            records, message, time.perf_counter() - start,
        )

    for k in range(opts.max_outer_iter):
        state.iter = k
        triple = surrogate_eval(surrogate, state.x, 2)
        state.y = triple.value
        state.H = lagrangian_hessian(problem, triple, state.x, state.lam, state.mu)
        state.B, E = modify_hessian(state.H, opts.delta)

        qp = assemble_qp(problem, triple, state.x, state.B, include_bounds=True)
        sol = solve_qp(qp, tol=opts.qp_tol)
        if sol.status != OPTIMAL:
            return report(QP_FAILURE, f"QP subproblem at iteration {k} returned {sol.status}")
        d = sol.d
        state.lam = sol.lambda_qp
        state.mu = sol.mu_qp[: problem.p_in]
        state.rho, state.nu = update_penalties(state.rho, state.nu, state.lam, state.mu)

        f_old = problem.values(state.x, state.y)[0]
        merit0 = merit(problem, state.x, state.y, state.rho, state.nu)
        D = merit_directional_derivative(problem, triple, state.x, d, state.rho, state.nu)
        if D > opts.descent_slack:
            raise DescentError(
                f"iteration {k}: merit directional derivative {D:.3e} > {opts.descent_slack:g}"
            )
        alpha, accepted = line_search(
            problem, surrogate, state.x, d, state.rho, state.nu, D, opts, merit0
        )

        x_new = state.x + alpha * d
        if problem.x_bounds is not None:
            # rounding only; the QP already keeps x + d inside the box
            x_new = np.clip(x_new, *problem.x_bounds)
        y_new = surrogate_eval(surrogate, x_new, 0).value
        f_new, h_new, g_new = problem.values(x_new, y_new)
        status = check_convergence(problem, x_new, y_new, f_old, d, opts.tol)
        records.append(
            IterationRecord(
                iter=k,
                f=float(f_new),
                merit=merit(problem, x_new, y_new, state.rho, state.nu),
                step_norm=float(np.linalg.norm(d)),
                alpha=alpha,
                violation=violation(h_new, g_new),
                elapsed_ms=1e3 * (time.perf_counter() - start),
                directional_derivative=D,
                accepted=accepted,
                hessian_modified=bool(np.any(E)),
            )
        )
        state.x = x_new
        if status != CONTINUE:
            return report(status)
    return report(MAX_ITER, f"no convergence within {opts.max_outer_iter} iterations")


# convergence log ------------------------------------------------------------


def write_convergence_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.iter, repr(r.f), repr(r.merit), repr(r.step_norm),
                        repr(r.alpha), repr(r.violation), f"{r.elapsed_ms:.3f}"])


def read_convergence_csv(path) -> list[IterationRecord]:
    """Parse a convergence log; errors carry the 1-based line number."""
    path = Path(path)
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return records
        if header != CSV_HEADER:
            raise ParseError(f"expected header {','.join(CSV_HEADER)}", line=1, path=path)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise ParseError(
                    f"expected {len(CSV_HEADER)} fields, got {len(row)}", line=line, path=path
                )
            try:
                it = int(row[0])
                vals = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise ParseError(str(exc), line=line, path=path) from None
            records.append(IterationRecord(it, *vals))
    return records
