"""Kernels for SVR with closed-form derivatives in the first argument."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fpsqp.errors import ConfigurationError

KERNELS = ("rbf", "linear", "polynomial")


@dataclass(frozen=True)
class Kernel:
    """Kernel kind and parameters.

    ``rbf``: ``exp(-gamma |x - xi|^2)``.
    ``linear``: ``x . xi``.
    ``polynomial``: ``(gamma x . xi + coef) ** degree``.
    """

    kind: str
    gamma: float = 1.0
    degree: int = 2
    coef: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ConfigurationError(
                f"unknown kernel {self.kind!r}; expected one of {KERNELS}"
            )
        if self.kind == "rbf" and not self.gamma > 0:
            raise ConfigurationError(f"rbf kernel needs gamma > 0, got {self.gamma}")
        if self.kind == "polynomial":
            if int(self.degree) != self.degree or self.degree < 1:
                raise ConfigurationError(
                    f"polynomial degree must be an integer >= 1, got {self.degree}"
                )
            if not np.isfinite(self.gamma):
                raise ConfigurationError("polynomial gamma must be finite")

    def to_dict(self) -> dict:
        if self.kind == "rbf":
            return {"kind": "rbf", "gamma": self.gamma}
        if self.kind == "linear":
            return {"kind": "linear"}
        return {
            "kind": "polynomial",
            "gamma": self.gamma,
            "degree": int(self.degree),
            "coef": self.coef,
        }


def kernel_eval(kernel: Kernel, x: np.ndarray, xi: np.ndarray):
    """Return ``(K, grad_x K, hess_x K)`` for a single pair."""
    k, g, h = kernel_eval_many(kernel, x, np.atleast_2d(xi), order=2)
    return float(k[0]), g[0], h[0]


def kernel_eval_many(kernel: Kernel, x: np.ndarray, xs: np.ndarray, order: int = 2):
    """Kernel values against every row of ``xs``, plus derivatives in ``x``.

    Returns arrays of shape ``(N,)``, ``(N, n)`` and ``(N, n, n)``; the
    derivative arrays are ``None`` beyond ``order``.
    """
    x = np.asarray(x, dtype=float)
    xs = np.asarray(xs, dtype=float)
    n = x.shape[0]
    grad = hess = None

    if kernel.kind == "rbf":
        gam = kernel.gamma
        u = x[None, :] - xs
        k = np.exp(-gam * np.einsum("ij,ij->i", u, u))
        if order >= 1:
            grad = -2.0 * gam * u * k[:, None]
        if order >= 2:
            hess = k[:, None, None] * (
                4.0 * gam * gam * u[:, :, None] * u[:, None, :]
                - 2.0 * gam * np.eye(n)[None]
            )
    elif kernel.kind == "linear":
        k = xs @ x
        if order >= 1:
            grad = xs.copy()
        if order >= 2:
            hess = np.zeros((xs.shape[0], n, n))
    else:
        gam, p, c = kernel.gamma, int(kernel.degree), kernel.coef
        t = gam * (xs @ x) + c
        k = t**p
        if order >= 1:
            grad = (p * gam * t ** (p - 1))[:, None] * xs
        if order >= 2:
            if p >= 2:
                coef2 = p * (p - 1) * gam * gam * t ** (p - 2)
            else:
                coef2 = np.zeros_like(t)
            hess = coef2[:, None, None] * xs[:, :, None] * xs[:, None, :]
    return k, grad, hess
