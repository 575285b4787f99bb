"""Kernel support vector regression (evaluation only)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fpsqp.errors import ConfigurationError, NumericError, ShapeError
from fpsqp.surrogate.base import EvalTriple, as_point, check_order, symmetrize
from fpsqp.surrogate.kernels import Kernel, kernel_eval_many


@dataclass(frozen=True, eq=False)
class SvrModel:
    """``y = sum_i c_i K(x, x_i) + bias`` with ``c_i = alpha_i - alpha_i*``."""

    support_vectors: np.ndarray
    dual_coeffs: np.ndarray
    bias: float
    kernel: Kernel
    kind: str = field(default="svr", init=False)

    def __post_init__(self):
        sv = np.array(self.support_vectors, dtype=float)
        coef = np.array(self.dual_coeffs, dtype=float).reshape(-1)
        if sv.ndim != 2 or sv.shape[0] == 0:
            raise ConfigurationError("SVR needs a non-empty 2-D support vector array")
        if coef.shape[0] != sv.shape[0]:
            raise ShapeError(
                f"{sv.shape[0]} support vectors but {coef.shape[0]} dual coefficients"
            )
        if not (np.all(np.isfinite(sv)) and np.all(np.isfinite(coef))):
            raise NumericError("SVR parameters must be finite")
        if not isinstance(self.kernel, Kernel):
            raise ConfigurationError("kernel must be a Kernel instance")
        sv.setflags(write=False)
        coef.setflags(write=False)
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coeffs", coef)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def n_inputs(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def n_outputs(self) -> int:
        return 1

    def evaluate(self, x, order: int = 2) -> EvalTriple:
        return svr_eval(self, x, order)


def svr_eval(model: SvrModel, x, order: int = 2) -> EvalTriple:
    check_order(order)
    x = as_point(x, model.n_inputs)
    k, g, h = kernel_eval_many(model.kernel, x, model.support_vectors, order)
    c = model.dual_coeffs
    value = np.array([c @ k + model.bias])
    if not np.all(np.isfinite(value)):
        raise NumericError("SVR output is not finite")
    jac = (c @ g)[None, :] if order >= 1 else None
    hess = symmetrize(np.tensordot(c, h, axes=1))[None] if order >= 2 else None
    return EvalTriple(value, jac, hess)
