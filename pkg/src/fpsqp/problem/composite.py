"""Linear objective with bounds on surrogate outputs.

This is the shape of the process case studies: a cost that is linear in
inputs and outputs, box bounds on the inputs, and purity-style bounds
``lo <= y_j <= hi`` on selected outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fpsqp.errors import ConfigurationError, ShapeError
from fpsqp.problem.nlp import LinearFunction, NlpProblem


@dataclass(frozen=True, eq=False)
class LinearCompositeProblem:
    """``min c.y + d.x + const`` subject to output and input bounds.

    ``output_bounds`` has one entry per output: ``None`` or ``(lo, hi)``
    where either side may be ``None``.
    """

    c: np.ndarray
    d: np.ndarray
    const: float = 0.0
    output_bounds: tuple | None = None
    x_bounds: tuple | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        d = np.asarray(self.d, dtype=float).reshape(-1)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        bounds = self.output_bounds
        if bounds is None:
            bounds = (None,) * c.shape[0]
        bounds = tuple(None if b is None else tuple(b) for b in bounds)
        if len(bounds) != c.shape[0]:
            raise ShapeError(f"{len(bounds)} output bounds for {c.shape[0]} outputs")
        for j, b in enumerate(bounds):
            if b is None:
                continue
            lo, hi = b
            if lo is not None and hi is not None and lo > hi:
                raise ConfigurationError(f"output {j}: lower bound {lo} > upper bound {hi}")
        object.__setattr__(self, "output_bounds", bounds)
        if self.x_bounds is not None:
            lo, hi = (np.asarray(v, dtype=float).reshape(-1) for v in self.x_bounds)
            if lo.shape != d.shape or hi.shape != d.shape:
                raise ShapeError(f"x_bounds must have {d.shape[0]} entries per side")
            bad = np.flatnonzero(lo > hi)
            if bad.size:
                raise ConfigurationError(f"input {int(bad[0])}: lower bound > upper bound")
            object.__setattr__(self, "x_bounds", (lo, hi))

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def m(self) -> int:
        return self.c.shape[0]


def linear_composite_to_nlp(p: LinearCompositeProblem) -> NlpProblem:
    """Expand output bounds into ``lo - y_j <= 0`` and ``y_j - hi <= 0`` rows."""
    n, m = p.n, p.m
    zero_x = np.zeros(n)
    ineq = []
    for j, b in enumerate(p.output_bounds):
        if b is None:
            continue
        lo, hi = b
        e = np.zeros(m)
        e[j] = 1.0
        if lo is not None:
            ineq.append(LinearFunction(zero_x, -e, lo))
        if hi is not None:
            ineq.append(LinearFunction(zero_x, e, -hi))
    return NlpProblem(n, m, LinearFunction(p.d, p.c, p.const), (), ineq, p.x_bounds)
