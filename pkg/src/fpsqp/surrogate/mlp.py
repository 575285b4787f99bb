"""Multilayer perceptron with exact Jacobian and Hessian.

The network is ``x -> W_L+1 phi_L(W_L ... phi_1(W_1 x + b_1) ...) + b_L+1``;
the output layer is affine. Derivatives are propagated forward through the
layers: for every pre-activation ``z`` we carry ``dz/dx`` and ``d2z/dx2``,
and each hidden layer adds its rank-one ``phi''`` term

    d2 a_k = phi'(z_k) d2 z_k + phi''(z_k) grad z_k grad z_k^T

before the next affine map, which acts linearly on both.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fpsqp.errors import ConfigurationError, NumericError, ShapeError
from fpsqp.surrogate.activations import activation_eval, check_activation
from fpsqp.surrogate.base import EvalTriple, as_point, check_order, symmetrize


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Dense feed-forward network.

    Attributes:
        weights: ``weights[l]`` has shape ``(layer_dims[l+1], layer_dims[l])``.
        biases: ``biases[l]`` has shape ``(layer_dims[l+1],)``.
        activations: One activation name per hidden layer
            (``len(weights) - 1`` entries).
    """

    weights: tuple
    biases: tuple
    activations: tuple
    kind: str = field(default="mlp", init=False)

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=float) for w in self.weights)
        bs = tuple(np.array(b, dtype=float) for b in self.biases)
        if not ws:
            raise ConfigurationError("an MLP needs at least one layer")
        if len(bs) != len(ws):
            raise ShapeError("one bias vector per weight matrix is required")
        acts = self.activations
        if isinstance(acts, str):
            acts = (acts,) * (len(ws) - 1)
        acts = tuple(check_activation(a) for a in acts)
        if len(acts) != len(ws) - 1:
            raise ShapeError(
                f"{len(ws) - 1} hidden layers but {len(acts)} activations"
            )
        for i, (w, b) in enumerate(zip(ws, bs)):
            if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[0]:
                raise ShapeError(f"layer {i}: weight {w.shape} / bias {b.shape}")
            if i and w.shape[1] != ws[i - 1].shape[0]:
                raise ShapeError(
                    f"layer {i} expects {w.shape[1]} inputs, "
                    f"previous layer gives {ws[i - 1].shape[0]}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericError(f"layer {i} has non-finite parameters")
            w.setflags(write=False)
            b.setflags(write=False)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)
        object.__setattr__(self, "activations", acts)

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[0]

    def evaluate(self, x, order: int = 2) -> EvalTriple:
        return mlp_eval(self, x, order)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Batched forward pass, ``X`` of shape ``(N, n)``."""
        a = np.asarray(X, dtype=float)
        for w, b, act in zip(self.weights[:-1], self.biases[:-1], self.activations):
            a, _, _ = activation_eval(act, a @ w.T + b)
        return a @ self.weights[-1].T + self.biases[-1]


def mlp_eval(model: MlpModel, x, order: int = 2) -> EvalTriple:
    """Forward pass with exact first and second derivatives."""
    check_order(order)
    x = as_point(x, model.n_inputs)
    n = x.shape[0]

    a = x
    jac = np.eye(n) if order >= 1 else None
    hess = np.zeros((n, n, n)) if order >= 2 else None

    for w, b, act in zip(model.weights[:-1], model.biases[:-1], model.activations):
        z = w @ a + b
        phi, d1, d2 = activation_eval(act, z)
        a = phi
        if order >= 1:
            jz = w @ jac
            if order >= 2:
                hz = np.tensordot(w, hess, axes=1)
                hess = d1[:, None, None] * hz + d2[:, None, None] * (
                    jz[:, :, None] * jz[:, None, :]
                )
            jac = d1[:, None] * jz

    w_out, b_out = model.weights[-1], model.biases[-1]
    value = w_out @ a + b_out
    if not np.all(np.isfinite(value)):
        raise NumericError("MLP output is not finite")
    if order == 0:
        return EvalTriple(value)
    jac = w_out @ jac
    if order == 1:
        return EvalTriple(value, jac)
    hess = symmetrize(np.tensordot(w_out, hess, axes=1))
    return EvalTriple(value, jac, hess)
