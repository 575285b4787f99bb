"""Differentiable surrogate models."""

from fpsqp.surrogate.activations import activation_eval
from fpsqp.surrogate.analytic import AnalyticAdapter
from fpsqp.surrogate.base import EvalTriple, SurrogateModel
from fpsqp.surrogate.ensemble import EnsembleModel, ensemble_eval
from fpsqp.surrogate.io import load_model, model_from_dict, model_to_dict, save_model
from fpsqp.surrogate.kernels import Kernel, kernel_eval
from fpsqp.surrogate.mlp import MlpModel, mlp_eval
from fpsqp.surrogate.svr import SvrModel, svr_eval
from fpsqp.surrogate.tree import (
    Branch,
    DecisionTreeModel,
    Leaf,
    LeafModel,
    dt_eval,
    dt_locate_leaf,
)

_DISPATCH = {
    "mlp": mlp_eval,
    "svr": svr_eval,
    "tree": dt_eval,
    "ensemble": ensemble_eval,
}


def surrogate_eval(model, x, order: int = 2) -> EvalTriple:
    """Evaluate any supported model kind."""
    fn = _DISPATCH.get(getattr(model, "kind", None))
    if fn is None:
        return model.evaluate(x, order)
    return fn(model, x, order)


__all__ = [
    "AnalyticAdapter",
    "Branch",
    "DecisionTreeModel",
    "EnsembleModel",
    "EvalTriple",
    "Kernel",
    "Leaf",
    "LeafModel",
    "MlpModel",
    "SurrogateModel",
    "SvrModel",
    "activation_eval",
    "dt_eval",
    "dt_locate_leaf",
    "ensemble_eval",
    "kernel_eval",
    "load_model",
    "mlp_eval",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "surrogate_eval",
    "svr_eval",
]
