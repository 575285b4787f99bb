"""Common surrogate types: the evaluation triple and the model protocol."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from fpsqp.errors import NumericError, ShapeError


@dataclass(frozen=True)
class EvalTriple:
    """Value, Jacobian and per-output Hessians of ``s`` at one point.

    Attributes:
        value: Output vector, shape ``(m,)``.
        jacobian: ``ds/dx``, shape ``(m, n)``. ``None`` if not requested.
        hessians: Stacked ``d2 s_j / dx2``, shape ``(m, n, n)``. ``None`` if
            not requested.
    """

    value: np.ndarray
    jacobian: np.ndarray | None = None
    hessians: np.ndarray | None = None

    @property
    def n_outputs(self) -> int:
        return self.value.shape[0]


@runtime_checkable
class SurrogateModel(Protocol):
    """Anything mapping R^n -> R^m with exact first and second derivatives."""

    kind: str

    @property
    def n_inputs(self) -> int: ...

    @property
    def n_outputs(self) -> int: ...

    def evaluate(self, x: np.ndarray, order: int = 2) -> EvalTriple: ...


def as_point(x, n: int) -> np.ndarray:
    """Validate an input point and return it as a float64 vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != n:
        raise ShapeError(f"expected input of shape ({n},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError("input contains non-finite entries")
    return x


def symmetrize(h: np.ndarray) -> np.ndarray:
    """Average a stack of square matrices with their transposes."""
    return 0.5 * (h + np.swapaxes(h, -1, -2))


def check_order(order: int) -> None:
    if order not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")
