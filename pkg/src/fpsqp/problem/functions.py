"""Benchmark test functions with exact gradients and Hessians.

All six are evaluated over the box [-2, 2]^n in the experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fpsqp.errors import ConfigurationError, ShapeError


@dataclass(frozen=True)
class TestFunction:
    name: str
    dim: int
    known_min_value: float
    known_minimizers: tuple

    __test__ = False  # keep pytest from collecting this class

    def __call__(self, x) -> float:
        return test_function_eval(self.name, x)

    def derivatives(self, x):
        """Return ``(value, gradient, hessian)`` at ``x``."""
        x = _check(self.name, x)
        return _DERIVS[self.name](x)

    def distance_to_minimizer(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return min(float(np.linalg.norm(x - np.asarray(m))) for m in self.known_minimizers)


def _sphere(x):
    return float(x @ x), 2.0 * x, 2.0 * np.eye(x.shape[0])


def _quadratic_matrix(n):
    diff = np.eye(n - 1, n) - np.eye(n - 1, n, k=1)
    return 2.0 * np.eye(n) + 2.0 * diff.T @ diff


def _quadratic(x):
    hess = _quadratic_matrix(x.shape[0])
    grad = hess @ x
    return 0.5 * float(x @ grad), grad, hess


def _six_hump_camel(x):
    x1, x2 = x
    value = (4.0 - 2.1 * x1**2 + x1**4 / 3.0) * x1**2 + x1 * x2 + 4.0 * (-1.0 + x2**2) * x2**2
    grad = np.array(
        [8.0 * x1 - 8.4 * x1**3 + 2.0 * x1**5 + x2, x1 - 8.0 * x2 + 16.0 * x2**3]
    )
    hess = np.array(
        [[8.0 - 25.2 * x1**2 + 10.0 * x1**4, 1.0], [1.0, -8.0 + 48.0 * x2**2]]
    )
    return float(value), grad, hess


def _schaffer2(x):
    x1, x2 = x
    u = x1**2 - x2**2
    du = np.array([2.0 * x1, -2.0 * x2])
    d2u = np.diag([2.0, -2.0])
    num = np.sin(u) ** 2 - 0.5
    dnum = np.sin(2.0 * u) * du
    d2num = 2.0 * np.cos(2.0 * u) * np.outer(du, du) + np.sin(2.0 * u) * d2u
    q = 1.0 + 0.001 * (x1**2 + x2**2)
    dq = 0.002 * x
    d2q = 0.002 * np.eye(2)
    inv = q**-2
    dinv = -2.0 * q**-3 * dq
    d2inv = 6.0 * q**-4 * np.outer(dq, dq) - 2.0 * q**-3 * d2q
    value = 0.5 + num * inv
    grad = dnum * inv + num * dinv
    hess = d2num * inv + np.outer(dnum, dinv) + np.outer(dinv, dnum) + num * d2inv
    return float(value), grad, hess


def _griewank(x):
    n = x.shape[0]
    root = np.sqrt(np.arange(1, n + 1))
    c = np.cos(x / root)
    s = np.sin(x / root)
    prod = np.prod(c)

    def prod_except(*skip):
        return np.prod([c[k] for k in range(n) if k not in skip])

    dprod = np.array([-s[i] / root[i] * prod_except(i) for i in range(n)])
    d2prod = np.empty((n, n))
    for i in range(n):
        d2prod[i, i] = -c[i] / root[i] ** 2 * prod_except(i)
        for j in range(i + 1, n):
            d2prod[i, j] = d2prod[j, i] = (
                s[i] / root[i] * s[j] / root[j] * prod_except(i, j)
            )
    value = 1.0 + (x @ x) / 4000.0 - prod
    return float(value), x / 2000.0 - dprod, np.eye(n) / 2000.0 - d2prod


def _ackley(x):
    # at the origin the cone term has no gradient; its minimum-norm
    # subgradient (zero) is used and its Hessian contribution dropped
    n = x.shape[0]
    rho = np.sqrt(x @ x / n)
    ea = np.exp(-0.2 * rho)
    cosmean = np.mean(np.cos(2.0 * np.pi * x))
    eb = np.exp(cosmean)
    value = -20.0 * ea - eb + 20.0 + np.e
    dc = -2.0 * np.pi * np.sin(2.0 * np.pi * x) / n
    d2c = np.diag(-4.0 * np.pi**2 * np.cos(2.0 * np.pi * x) / n)
    grad = -eb * dc
    hess = -eb * (d2c + np.outer(dc, dc))
    if rho > 0.0:
        drho = x / (n * rho)
        d2rho = np.eye(n) / (n * rho) - np.outer(x, x) / (n**2 * rho**3)
        grad = grad + 4.0 * ea * drho
        hess = hess + 4.0 * ea * (d2rho - 0.2 * np.outer(drho, drho))
    return float(value), grad, hess


_DERIVS = {
    "sphere": _sphere,
    "quadratic": _quadratic,
    "six_hump_camel": _six_hump_camel,
    "schaffer2": _schaffer2,
    "griewank": _griewank,
    "ackley": _ackley,
}

TEST_FUNCTIONS = {
    "sphere": TestFunction("sphere", 10, 0.0, ((0.0,) * 10,)),
    "quadratic": TestFunction("quadratic", 10, 0.0, ((0.0,) * 10,)),
    "six_hump_camel": TestFunction(
        "six_hump_camel", 2, -1.03, ((0.09, -0.71), (-0.09, 0.71))
    ),
    "schaffer2": TestFunction("schaffer2", 2, 0.0, ((0.0, 0.0),)),
    "griewank": TestFunction("griewank", 5, 0.0, ((0.0,) * 5,)),
    "ackley": TestFunction("ackley", 5, 0.0, ((0.0,) * 5,)),
}


def derivative_function(name: str):
    """Dimension-agnostic ``x -> (value, gradient, hessian)`` for ``name``."""
    get_test_function(name)
    return _DERIVS[name]


def get_test_function(name: str) -> TestFunction:
    try:
        return TEST_FUNCTIONS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown test function {name!r}; expected one of {sorted(TEST_FUNCTIONS)}"
        ) from None


def _check(name, x):
    fn = get_test_function(name)
    x = np.asarray(x, dtype=float)
    if x.shape != (fn.dim,):
        raise ShapeError(f"{name} takes a point of shape ({fn.dim},), got {x.shape}")
    return x


def test_function_eval(name: str, x) -> float:
    """Exact value of a named benchmark function."""
    return _DERIVS[name](_check(name, x))[0]


test_function_eval.__test__ = False


def evaluate_batch(name: str, X: np.ndarray) -> np.ndarray:
    """Row-wise values for an ``(N, dim)`` array."""
    X = np.asarray(X, dtype=float)
    return np.array([test_function_eval(name, row) for row in X])
