"""Finite-difference validation of surrogate derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fpsqp.surrogate.base import EvalTriple

FD_REL_STEP = 1e-5


def _central(fn, x, rel_step):
    cols = []
    for i in range(x.shape[0]):
        h = rel_step * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        cols.append((fn(x + e) - fn(x - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def relative_error(value, reference) -> float:
    """``max|value - reference| / max(1, max|reference|)``."""
    value = np.asarray(value, dtype=float)
    reference = np.asarray(reference, dtype=float)
    scale = max(1.0, float(np.max(np.abs(reference), initial=0.0)))
    return float(np.max(np.abs(value - reference), initial=0.0)) / scale


@dataclass(frozen=True)
class DerivativeCheck:
    n_points: int
    grad_error: float
    hess_error: float
    worst_grad_point: np.ndarray
    worst_hess_point: np.ndarray

    def passed(self, grad_tol=1e-5, hess_tol=1e-3) -> bool:
        return self.grad_error <= grad_tol and self.hess_error <= hess_tol


def check_derivatives(model, points, evaluate=None, rel_step=FD_REL_STEP) -> DerivativeCheck:
    """Compare analytic derivatives with central differences at each point.

    The Jacobian is checked against differences of the value and the
    Hessians against differences of the analytic Jacobian.
    """
    if evaluate is None:
        from fpsqp.surrogate import surrogate_eval as evaluate

    points = np.atleast_2d(np.asarray(points, dtype=float))
    worst_g = worst_h = 0.0
    pg = ph = points[0]
    for x in points:
        t: EvalTriple = evaluate(model, x, 2)
        fd_j = _central(lambda z: evaluate(model, z, 0).value, x, rel_step)
        fd_h = _central(lambda z: evaluate(model, z, 1).jacobian, x, rel_step)
        eg = relative_error(t.jacobian, fd_j)
        eh = relative_error(t.hessians, fd_h)
        if eg >= worst_g:
            worst_g, pg = eg, x
        if eh >= worst_h:
            worst_h, ph = eh, x
    return DerivativeCheck(points.shape[0], worst_g, worst_h, pg.copy(), ph.copy())
