"""Surrogate adapter around closed-form functions with exact derivatives.

Used to test the optimizer separately from fit quality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from fpsqp.errors import ConfigurationError, NumericError
from fpsqp.problem.functions import TEST_FUNCTIONS, derivative_function, get_test_function
from fpsqp.surrogate.base import EvalTriple, as_point, check_order, symmetrize


@dataclass(frozen=True, eq=False)
class AnalyticAdapter:
    """Wrap ``fn(x) -> (value[m], jacobian[m, n], hessians[m, n, n])``.

    ``name`` identifies built-in functions so the adapter can be written to
    a model file; custom callables are in-memory only.
    """

    fn: Callable
    n_in: int
    n_out: int
    name: str | None = None
    kind: str = field(default="analytic", init=False)

    @property
    def n_inputs(self) -> int:
        return self.n_in

    @property
    def n_outputs(self) -> int:
        return self.n_out

    @classmethod
    def identity(cls, n: int) -> "AnalyticAdapter":
        def fn(x):
            return x.copy(), np.eye(n), np.zeros((n, n, n))

        return cls(fn, n, n, "identity")

    @classmethod
    def from_test_function(cls, name: str, dim: int | None = None) -> "AnalyticAdapter":
        """Single-output adapter for a benchmark function.

        ``dim`` overrides the table dimension for the separable functions.
        """
        tf = get_test_function(name)
        n = tf.dim if dim is None else int(dim)
        if n != tf.dim and name not in ("sphere", "quadratic", "griewank", "ackley"):
            raise ConfigurationError(f"{name} is only defined in {tf.dim} dimensions")
        derivs = derivative_function(name)

        def fn(x):
            v, g, h = derivs(x)
            return np.array([v]), g[None, :], h[None]

        return cls(fn, n, 1, name)

    @classmethod
    def named(cls, name: str, dim: int) -> "AnalyticAdapter":
        if name == "identity":
            return cls.identity(dim)
        if name in TEST_FUNCTIONS:
            return cls.from_test_function(name, dim)
        raise ConfigurationError(f"unknown analytic function {name!r}")

    def evaluate(self, x, order: int = 2) -> EvalTriple:
        check_order(order)
        x = as_point(x, self.n_in)
        value, jac, hess = self.fn(x)
        value = np.asarray(value, dtype=float).reshape(self.n_out)
        if not np.all(np.isfinite(value)):
            raise NumericError(f"analytic function {self.name!r} returned non-finite values")
        if order == 0:
            return EvalTriple(value)
        jac = np.asarray(jac, dtype=float).reshape(self.n_out, self.n_in)
        if order == 1:
            return EvalTriple(value, jac)
        hess = np.asarray(hess, dtype=float).reshape(self.n_out, self.n_in, self.n_in)
        return EvalTriple(value, jac, symmetrize(hess))
