"""Nonlinear programs over decision variables ``x`` and surrogate outputs ``y``.

Every scalar function ``F(x, y)`` (objective, each equality, each
inequality) reports its value and partial derivatives through
:class:`Partials`. Inequalities use the ``g(x, y) <= 0`` convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from fpsqp.errors import ConfigurationError, ShapeError


class Partials(NamedTuple):
    """Value and partials of a scalar ``F(x, y)``.

    ``dxy[i, j]`` is ``d2F / dx_i dy_j``. Second partials may be ``None``
    when only first-order information is available.
    """

    value: float
    dx: np.ndarray
    dy: np.ndarray
    dxx: np.ndarray | None = None
    dxy: np.ndarray | None = None
    dyy: np.ndarray | None = None

    @property
    def has_second(self) -> bool:
        return self.dxx is not None and self.dxy is not None and self.dyy is not None


class LinearFunction:
    """``F = cx . x + cy . y + const``."""

    def __init__(self, cx, cy, const=0.0):
        self.cx = np.asarray(cx, dtype=float).reshape(-1)
        self.cy = np.asarray(cy, dtype=float).reshape(-1)
        self.const = float(const)

    def partials(self, x, y) -> Partials:
        n, m = self.cx.shape[0], self.cy.shape[0]
        return Partials(
            float(self.cx @ x + self.cy @ y + self.const),
            self.cx.copy(),
            self.cy.copy(),
            np.zeros((n, n)),
            np.zeros((n, m)),
            np.zeros((m, m)),
        )


class QuadraticFunction:
    """``F = 0.5 z'Qz + c'z + const`` with ``z = (x, y)``."""

    def __init__(self, Q, c, const=0.0, n=None):
        self.Q = np.asarray(Q, dtype=float)
        self.Q = 0.5 * (self.Q + self.Q.T)
        self.c = np.asarray(c, dtype=float).reshape(-1)
        self.const = float(const)
        self.n = n

    def partials(self, x, y) -> Partials:
        n = x.shape[0]
        z = np.concatenate([x, y])
        grad = self.Q @ z + self.c
        return Partials(
            float(0.5 * z @ self.Q @ z + self.c @ z + self.const),
            grad[:n],
            grad[n:],
            self.Q[:n, :n].copy(),
            self.Q[:n, n:].copy(),
            self.Q[n:, n:].copy(),
        )


class CallbackFunction:
    """Wrap ``fn(x, y)`` returning a :class:`Partials` or an equivalent tuple."""

    def __init__(self, fn: Callable):
        self.fn = fn

    def partials(self, x, y) -> Partials:
        out = self.fn(x, y)
        if not isinstance(out, Partials):
            out = Partials(*out)
        return Partials(
            float(out.value),
            *(None if a is None else np.asarray(a, dtype=float) for a in out[1:]),
        )


@dataclass(frozen=True, eq=False)
class NlpProblem:
    """``min f(x, y)  s.t.  h(x, y) = 0,  g(x, y) <= 0,  y = s(x)``.

    Attributes:
        n: Number of decision variables.
        m: Number of surrogate outputs.
        f: Objective.
        eq: Equality constraint functions.
        ineq: Inequality constraint functions.
        x_bounds: Optional ``(lower, upper)`` arrays; entries may be infinite.
    """

    n: int
    m: int
    f: object
    eq: Sequence = ()
    ineq: Sequence = ()
    x_bounds: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "eq", tuple(self.eq))
        object.__setattr__(self, "ineq", tuple(self.ineq))
        if self.x_bounds is not None:
            lo, hi = (np.asarray(b, dtype=float).reshape(-1) for b in self.x_bounds)
            if lo.shape != (self.n,) or hi.shape != (self.n,):
                raise ShapeError(f"x_bounds must be two vectors of length {self.n}")
            if np.any(lo > hi):
                raise ConfigurationError("x_bounds has lower > upper")
            object.__setattr__(self, "x_bounds", (lo, hi))

    @property
    def p_eq(self) -> int:
        return len(self.eq)

    @property
    def p_in(self) -> int:
        return len(self.ineq)

    def partials(self, x, y):
        """Partials of ``f``, each ``h`` and each ``g`` at ``(x, y)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fp = self.f.partials(x, y)
        hp = [fn.partials(x, y) for fn in self.eq]
        gp = [fn.partials(x, y) for fn in self.ineq]
        for p in [fp, *hp, *gp]:
            if p.dx.shape != (self.n,) or p.dy.shape != (self.m,):
                raise ShapeError(
                    f"partials have shapes {p.dx.shape}/{p.dy.shape}, "
                    f"expected ({self.n},)/({self.m},)"
                )
        return fp, hp, gp

    def values(self, x, y):
        """``(f, h, g)`` values at ``(x, y)``."""
        fp, hp, gp = self.partials(x, y)
        return fp.value, np.array([p.value for p in hp]), np.array([p.value for p in gp])

    def in_bounds(self, x, slack: float = 0.0) -> bool:
        if self.x_bounds is None:
            return True
        lo, hi = self.x_bounds
        return bool(np.all(x >= lo - slack) and np.all(x <= hi + slack))


def validate_partials(problem: NlpProblem, x, y, rtol: float = 1e-5, step: float = 1e-6) -> float:
    """Compare every callback's partials with central differences.

    Returns the worst relative error; raises :class:`ConfigurationError`
    when it exceeds ``rtol``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.concatenate([x, y])
    n = x.shape[0]
    worst = 0.0

    def grad_of(fn, zz):
        p = fn.partials(zz[:n], zz[n:])
        return p.value, np.concatenate([p.dx, p.dy])

    for fn in [problem.f, *problem.eq, *problem.ineq]:
        p = fn.partials(x, y)
        g = np.concatenate([p.dx, p.dy])
        fd_g = np.empty_like(g)
        fd_h = np.empty((z.shape[0], z.shape[0]))
        for i in range(z.shape[0]):
            h = step * (1.0 + abs(z[i]))
            e = np.zeros_like(z)
            e[i] = h
            vp, gp_ = grad_of(fn, z + e)
            vm, gm_ = grad_of(fn, z - e)
            fd_g[i] = (vp - vm) / (2 * h)
            fd_h[:, i] = (gp_ - gm_) / (2 * h)
        worst = max(worst, _rel(g, fd_g))
        if p.has_second:
            full = np.block([[p.dxx, p.dxy], [p.dxy.T, p.dyy]])
            worst = max(worst, _rel(full, 0.5 * (fd_h + fd_h.T)))
    if worst > rtol:
        raise ConfigurationError(
            f"callback partials disagree with finite differences (rel err {worst:.2e})"
        )
    return worst


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b), initial=0.0)))
