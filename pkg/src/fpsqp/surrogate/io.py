"""JSON model files.

Every document has exactly four top-level keys::

    {"kind": "mlp" | "svr" | "tree" | "ensemble" | "analytic",
     "input_dim": n, "output_dim": m, "payload": {...}}

Matrices are stored as ``{"shape": [rows, cols], "data": [...]}`` with
``data`` in row-major order. Payloads per kind:

* ``mlp``: ``{"activations": [str, ...], "layers": [{"weight": matrix,
  "bias": [...]}, ...]}``; one activation per hidden layer.
* ``svr``: ``{"kernel": {"kind": "rbf", "gamma": g} | {"kind": "linear"} |
  {"kind": "polynomial", "gamma": g, "degree": d, "coef": c},
  "support_vectors": matrix, "dual_coeffs": [...], "bias": b}``.
* ``tree``: ``{"root": id, "nodes": [{"id": id, "type": "branch", "a": [...],
  "b": b, "left": id, "right": id} | {"id": id, "type": "leaf",
  "model": {"kind": "affine" | "quadratic", "lin": [...], "const": r,
  "quad": matrix}}]}``; ``quad`` only for quadratic leaves and holds the
  leaf Hessian.
* ``ensemble``: ``{"weights": [...], "members": [model document, ...]}``.
* ``analytic``: ``{"function": "identity" | test function name}``.

Unknown keys anywhere are rejected. Floats are written with ``repr`` so a
write/read round trip is exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from fpsqp.errors import ConfigurationError, FpsqpError, ParseError
from fpsqp.surrogate.analytic import AnalyticAdapter
from fpsqp.surrogate.ensemble import EnsembleModel
from fpsqp.surrogate.kernels import Kernel
from fpsqp.surrogate.mlp import MlpModel
from fpsqp.surrogate.svr import SvrModel
from fpsqp.surrogate.tree import Branch, DecisionTreeModel, Leaf, LeafModel

TOP_KEYS = {"kind", "input_dim", "output_dim", "payload"}


def _matrix(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": a.reshape(-1).tolist()}


def _vector(a) -> list:
    return np.asarray(a, dtype=float).reshape(-1).tolist()


def model_to_dict(model) -> dict:
    kind = getattr(model, "kind", None)
    if kind == "mlp":
        payload = {
            "activations": list(model.activations),
            "layers": [
                {"weight": _matrix(w), "bias": _vector(b)}
                for w, b in zip(model.weights, model.biases)
            ],
        }
    elif kind == "svr":
        payload = {
            "kernel": model.kernel.to_dict(),
            "support_vectors": _matrix(model.support_vectors),
            "dual_coeffs": _vector(model.dual_coeffs),
            "bias": model.bias,
        }
    elif kind == "tree":
        nodes = []
        for nid, node in model.nodes.items():
            if isinstance(node, Branch):
                nodes.append(
                    {"id": nid, "type": "branch", "a": _vector(node.a), "b": node.b,
                     "left": node.left, "right": node.right}
                )
            else:
                leaf = node.model
                doc = {"kind": leaf.kind, "lin": _vector(leaf.lin), "const": leaf.const}
                if leaf.kind == "quadratic":
                    doc["quad"] = _matrix(leaf.quad)
                nodes.append({"id": nid, "type": "leaf", "model": doc})
        payload = {"root": model.root, "nodes": nodes}
    elif kind == "ensemble":
        payload = {
            "weights": _vector(model.weights),
            "members": [model_to_dict(m) for m in model.members],
        }
    elif kind == "analytic":
        if model.name is None:
            raise ConfigurationError("analytic adapters around custom callables cannot be saved")
        payload = {"function": model.name}
    else:
        raise ConfigurationError(f"cannot serialize model of kind {kind!r}")
    return {
        "kind": kind,
        "input_dim": model.n_inputs,
        "output_dim": model.n_outputs,
        "payload": payload,
    }


def _keys(doc, required, optional=(), where="model"):
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{where}: expected an object")
    unknown = set(doc) - set(required) - set(optional)
    if unknown:
        raise ConfigurationError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = set(required) - set(doc)
    if missing:
        raise ConfigurationError(f"{where}: missing field(s) {sorted(missing)}")


def _load_matrix(doc, where):
    _keys(doc, {"shape", "data"}, where=where)
    shape = tuple(int(s) for s in doc["shape"])
    data = np.array(doc["data"], dtype=float)
    if len(shape) != 2 or data.size != shape[0] * shape[1]:
        raise ConfigurationError(f"{where}: shape {list(shape)} does not match {data.size} values")
    return data.reshape(shape)


def model_from_dict(doc: dict, where: str = "model"):
    _keys(doc, TOP_KEYS, where=where)
    kind = doc["kind"]
    payload = doc["payload"]
    if kind == "mlp":
        _keys(payload, {"activations", "layers"}, where=f"{where}.payload")
        ws, bs = [], []
        for i, layer in enumerate(payload["layers"]):
            lw = f"{where}.payload.layers[{i}]"
            _keys(layer, {"weight", "bias"}, where=lw)
            ws.append(_load_matrix(layer["weight"], f"{lw}.weight"))
            bs.append(np.array(layer["bias"], dtype=float))
        model = MlpModel(ws, bs, tuple(payload["activations"]))
    elif kind == "svr":
        _keys(payload, {"kernel", "support_vectors", "dual_coeffs", "bias"}, where=f"{where}.payload")
        kdoc = payload["kernel"]
        _keys(kdoc, {"kind"}, {"gamma", "degree", "coef"}, where=f"{where}.payload.kernel")
        model = SvrModel(
            _load_matrix(payload["support_vectors"], f"{where}.payload.support_vectors"),
            payload["dual_coeffs"],
            payload["bias"],
            Kernel(**kdoc),
        )
    elif kind == "tree":
        _keys(payload, {"root", "nodes"}, where=f"{where}.payload")
        nodes = {}
        for i, nd in enumerate(payload["nodes"]):
            nw = f"{where}.payload.nodes[{i}]"
            if not isinstance(nd, dict) or nd.get("type") not in ("branch", "leaf"):
                raise ConfigurationError(f"{nw}: 'type' must be 'branch' or 'leaf'")
            if nd["type"] == "branch":
                _keys(nd, {"id", "type", "a", "b", "left", "right"}, where=nw)
                node = Branch(np.array(nd["a"], dtype=float), nd["b"], nd["left"], nd["right"])
            else:
                _keys(nd, {"id", "type", "model"}, where=nw)
                md = nd["model"]
                _keys(md, {"kind", "lin"}, {"const", "quad"}, where=f"{nw}.model")
                quad = _load_matrix(md["quad"], f"{nw}.model.quad") if "quad" in md else None
                node = Leaf(LeafModel(md["kind"], md["lin"], md.get("const", 0.0), quad))
            if nd["id"] in nodes:
                raise ConfigurationError(f"{nw}: duplicate node id {nd['id']!r}")
            nodes[nd["id"]] = node
        model = DecisionTreeModel(nodes, payload["root"])
    elif kind == "ensemble":
        _keys(payload, {"weights", "members"}, where=f"{where}.payload")
        members = [
            model_from_dict(m, f"{where}.payload.members[{i}]")
            for i, m in enumerate(payload["members"])
        ]
        model = EnsembleModel(members, payload["weights"])
    elif kind == "analytic":
        _keys(payload, {"function"}, where=f"{where}.payload")
        model = AnalyticAdapter.named(payload["function"], int(doc["input_dim"]))
    else:
        raise ConfigurationError(f"{where}: unknown model kind {kind!r}")
    if model.n_inputs != doc["input_dim"] or model.n_outputs != doc["output_dim"]:
        raise ConfigurationError(
            f"{where}: declared dims ({doc['input_dim']}, {doc['output_dim']}) "
            f"but payload gives ({model.n_inputs}, {model.n_outputs})"
        )
    return model


def save_model(model, path) -> None:
    text = json.dumps(model_to_dict(model), indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path):
    """Read a model file. Any structural problem raises :class:`ParseError`."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, path=path) from exc
    try:
        return model_from_dict(doc)
    except (FpsqpError, TypeError, ValueError, KeyError) as exc:
        raise ParseError(str(exc), path=path) from exc
