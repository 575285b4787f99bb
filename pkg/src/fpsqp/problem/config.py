"""Problem configuration files.

A problem file is a JSON object::

    {
      "surrogate_model_path": "six_hump.json",
      "objective": {"c": [1.0], "d": [0.0, 0.0], "const": 0.0},
      "output_bounds": [null],
      "x_bounds": [[-2, 2], [-2, 2]],
      "x0": [2, 2],
      "solver": {"tol": 1e-6},
      "test_function": "six_hump_camel"
    }

``surrogate_model_path`` is resolved relative to the config file. Only
``surrogate_model_path``, ``objective.c`` and ``x0`` are required; ``d``
defaults to zeros and ``output_bounds``/``x_bounds`` to unbounded. Each
bound is ``null`` or ``[lo, hi]`` with either side ``null``. ``solver``
accepts any :class:`~fpsqp.sqp.SolverOptions` field. ``test_function``
names a built-in function whose true value is reported next to the
surrogate optimum.

Validation errors carry the line of the offending key.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fpsqp.errors import ConfigurationError, ParseError
from fpsqp.problem.composite import LinearCompositeProblem, linear_composite_to_nlp
from fpsqp.problem.functions import TEST_FUNCTIONS

TOP_KEYS = {"surrogate_model_path", "objective", "output_bounds", "x_bounds", "x0", "solver",
            "test_function"}
OBJECTIVE_KEYS = {"c", "d", "const"}


class ConfigError(ConfigurationError):
    """Invalid problem config; ``line`` is 1-based when the key was found."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = "" if path is None else str(path)
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class ProblemConfig:
    model_path: Path
    problem: LinearCompositeProblem
    x0: np.ndarray
    solver: dict
    test_function: str | None = None

    def to_nlp(self):
        return linear_composite_to_nlp(self.problem)


def _key_line(text: str, *keys: str) -> int | None:
    """Line of the last key in ``keys``, searching each after the previous."""
    pos = 0
    for key in keys:
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m is None:
            return None
        pos = m.start()
    return text.count("\n", 0, pos) + 1


def _vector(value, name, err, length=None):
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise err(f"{name} must be a list of numbers") from None
    if v.ndim != 1 or (length is not None and v.shape[0] != length):
        want = f" of length {length}" if length is not None else ""
        raise err(f"{name} must be a flat list{want}")
    if not np.all(np.isfinite(v)):
        raise err(f"{name} must be finite")
    return v


def _bounds(value, name, count, err, allow_none_sides=True):
    if value is None:
        return None
    if not isinstance(value, list) or len(value) != count:
        raise err(f"{name} must be a list of {count} entries")
    out = []
    for i, b in enumerate(value):
        if b is None:
            out.append(None)
            continue
        if not isinstance(b, list) or len(b) != 2:
            raise err(f"{name}[{i}] must be null or [lo, hi]")
        lo, hi = b
        for side in (lo, hi):
            if side is None and allow_none_sides:
                continue
            if not isinstance(side, (int, float)) or isinstance(side, bool):
                raise err(f"{name}[{i}] bounds must be numbers")
        if lo is not None and hi is not None and lo > hi:
            raise err(f"{name}[{i}]: lower bound {lo} > upper bound {hi}")
        out.append((lo, hi))
    return out


def parse_problem_config(text: str, path=None, base_dir=None) -> ProblemConfig:
    """Validate the JSON text of a problem config."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, path=path) from None

    def err_at(*keys):
        line = _key_line(text, *keys) if keys else None
        return lambda msg: ConfigError(msg, line=line, path=path)

    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object", line=1, path=path)
    for key in doc:
        if key not in TOP_KEYS:
            raise err_at(key)(f"unknown key {key!r}")
    for key in ("surrogate_model_path", "objective", "x0"):
        if key not in doc:
            raise ConfigError(f"missing required key {key!r}", path=path)

    model_path = doc["surrogate_model_path"]
    if not isinstance(model_path, str) or not model_path:
        raise err_at("surrogate_model_path")("surrogate_model_path must be a non-empty string")
    model_path = Path(model_path)
    if not model_path.is_absolute() and base_dir is not None:
        model_path = Path(base_dir) / model_path

    obj = doc["objective"]
    if not isinstance(obj, dict):
        raise err_at("objective")("objective must be an object")
    for key in obj:
        if key not in OBJECTIVE_KEYS:
            raise err_at("objective", key)(f"unknown objective key {key!r}")
    if "c" not in obj:
        raise err_at("objective")("objective is missing 'c'")
    c = _vector(obj["c"], "objective.c", err_at("objective", "c"))
    x0 = _vector(doc["x0"], "x0", err_at("x0"))
    n = x0.shape[0]
    d = _vector(obj.get("d", [0.0] * n), "objective.d", err_at("objective", "d"), n)
    const = obj.get("const", 0.0)
    if not isinstance(const, (int, float)) or isinstance(const, bool):
        raise err_at("objective", "const")("objective.const must be a number")

    out_b = _bounds(doc.get("output_bounds"), "output_bounds", c.shape[0], err_at("output_bounds"))
    x_b = _bounds(doc.get("x_bounds"), "x_bounds", n, err_at("x_bounds"))
    x_bounds = None
    if x_b is not None:
        lo = np.array([-np.inf if b is None or b[0] is None else b[0] for b in x_b], dtype=float)
        hi = np.array([np.inf if b is None or b[1] is None else b[1] for b in x_b], dtype=float)
        if np.any(x0 < lo) or np.any(x0 > hi):
            raise err_at("x0")("x0 lies outside x_bounds")
        x_bounds = (lo, hi)

    solver = doc.get("solver", {})
    if not isinstance(solver, dict):
        raise err_at("solver")("solver must be an object")
    from fpsqp.sqp import SolverOptions

    for key in solver:
        if key not in SolverOptions.field_names():
            raise err_at("solver", key)(f"unknown solver option {key!r}")
    try:
        SolverOptions(**solver)
    except ConfigurationError as exc:
        raise err_at("solver")(str(exc)) from None

    tf = doc.get("test_function")
    if tf is not None and tf not in TEST_FUNCTIONS:
        raise err_at("test_function")(
            f"unknown test function {tf!r}; choose from {sorted(TEST_FUNCTIONS)}"
        )
    if tf is not None and TEST_FUNCTIONS[tf].dim != n:
        raise err_at("test_function")(f"{tf} is {TEST_FUNCTIONS[tf].dim}-D but x0 has {n} entries")

    problem = LinearCompositeProblem(c, d, float(const), out_b, x_bounds)
    return ProblemConfig(model_path, problem, x0, dict(solver), tf)


def load_problem_config(path) -> ProblemConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_problem_config(text, path=path, base_dir=path.parent)
