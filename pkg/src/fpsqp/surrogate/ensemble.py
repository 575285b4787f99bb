"""Weighted ensembles of surrogates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fpsqp.errors import ConfigurationError, ShapeError
from fpsqp.surrogate.base import EvalTriple, as_point, check_order


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    """``s(x) = sum_i w_i s_i(x)``; derivatives combine the same way."""

    members: tuple
    weights: tuple
    kind: str = field(default="ensemble", init=False)

    def __post_init__(self):
        members = tuple(self.members)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if not members:
            raise ConfigurationError("an ensemble needs at least one member")
        if weights.shape[0] != len(members):
            raise ShapeError(f"{len(members)} members but {weights.shape[0]} weights")
        if not np.all(np.isfinite(weights)):
            raise ConfigurationError("ensemble weights must be finite")
        dims = {(m.n_inputs, m.n_outputs) for m in members}
        if len(dims) != 1:
            raise ShapeError(f"ensemble members disagree on (n, m): {sorted(dims)}")
        weights.setflags(write=False)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)

    @property
    def n_inputs(self) -> int:
        return self.members[0].n_inputs

    @property
    def n_outputs(self) -> int:
        return self.members[0].n_outputs

    def evaluate(self, x, order: int = 2) -> EvalTriple:
        return ensemble_eval(self, x, order)


def ensemble_eval(model: EnsembleModel, x, order: int = 2) -> EvalTriple:
    check_order(order)
    x = as_point(x, model.n_inputs)
    triples = [m.evaluate(x, order) for m in model.members]
    w = model.weights
    value = sum(wi * t.value for wi, t in zip(w, triples))
    jac = sum(wi * t.jacobian for wi, t in zip(w, triples)) if order >= 1 else None
    hess = sum(wi * t.hessians for wi, t in zip(w, triples)) if order >= 2 else None
    return EvalTriple(value, jac, hess)
