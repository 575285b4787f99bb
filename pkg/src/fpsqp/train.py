"""MLP training on sampled data, fit metrics and dataset files.

Training minimizes mean squared error with Adam on z-scored inputs and
targets. The scaling is folded back into the first and last layers of the
exported model, so the model consumes and produces raw units.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fpsqp.errors import ConfigurationError, MetricError, ParseError, TrainingError
from fpsqp.surrogate.activations import activation_eval, check_activation
from fpsqp.surrogate.mlp import MlpModel

SPLITS = ("train", "val", "test")


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    split: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        Y = np.asarray(self.targets, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        S = np.asarray(self.split, dtype=object).reshape(-1)
        if X.ndim != 2 or Y.ndim != 2 or not (X.shape[0] == Y.shape[0] == S.shape[0]):
            raise ConfigurationError(
                f"dataset shapes disagree: inputs {X.shape}, targets {Y.shape}, split {S.shape}"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ConfigurationError("dataset contains non-finite values")
        bad = set(S.tolist()) - set(SPLITS)
        if bad:
            raise ConfigurationError(f"unknown split tag(s) {sorted(bad)}")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", Y)
        object.__setattr__(self, "split", S)

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.targets.shape[1]

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def subset(self, tag: str):
        mask = self.split == tag
        return self.inputs[mask], self.targets[mask]


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    ``lr_schedule`` is ``"constant"`` or ``"cosine"``; the cosine schedule
    anneals from ``learning_rate`` to ``min_learning_rate`` over ``epochs``.
    """

    hidden_dims: tuple = (64, 64)
    activation: str = "swish"
    learning_rate: float = 1e-3
    epochs: int = 5000
    batch_size: int = 64
    seed: int = 0
    early_stop_patience: int = 200
    lr_schedule: str = "constant"
    min_learning_rate: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if any(h < 1 for h in self.hidden_dims):
            raise ConfigurationError("hidden layer widths must be positive")
        check_activation(self.activation)
        for name in ("learning_rate", "epochs", "batch_size", "early_stop_patience"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ConfigurationError(f"unknown lr_schedule {self.lr_schedule!r}")
        if not 0 < self.min_learning_rate <= self.learning_rate:
            raise ConfigurationError("min_learning_rate must lie in (0, learning_rate]")

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown training option(s) {sorted(unknown)}")
        return cls(**doc)


@dataclass
class TrainHistory:
    epochs: list = field(default_factory=list)
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    best_epoch: int = -1

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_mse", "val_mse"])
            for row in zip(self.epochs, self.train_mse, self.val_mse):
                w.writerow([row[0], repr(row[1]), repr(row[2])])


def _init_params(dims, rng):
    params = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(3.0 / fan_in)
        params.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        params.append(np.zeros(fan_out))
    return params


def _forward(params, X, act):
    """Return the output and per-layer caches (input, pre-activation derivative)."""
    a = X
    caches = []
    n_layers = len(params) // 2
    for l in range(n_layers - 1):
        W, b = params[2 * l], params[2 * l + 1]
        z = a @ W.T + b
        phi, d1, _ = activation_eval(act, z)
        caches.append((a, d1))
        a = phi
    caches.append((a, None))
    W, b = params[-2], params[-1]
    return a @ W.T + b, caches


def _backward(params, caches, err):
    grads = [None] * len(params)
    delta = err
    for l in range(len(params) // 2 - 1, -1, -1):
        a, _ = caches[l]
        grads[2 * l] = delta.T @ a
        grads[2 * l + 1] = delta.sum(axis=0)
        if l:
            delta = (delta @ params[2 * l]) * caches[l - 1][1]
    return grads


def _export(params, act, x_mean, x_std, y_mean, y_std) -> MlpModel:
    ws = [params[2 * l].copy() for l in range(len(params) // 2)]
    bs = [params[2 * l + 1].copy() for l in range(len(params) // 2)]
    ws[0] = ws[0] / x_std[None, :]
    bs[0] = bs[0] - ws[0] @ x_mean
    ws[-1] = y_std[:, None] * ws[-1]
    bs[-1] = y_std * bs[-1] + y_mean
    return MlpModel(ws, bs, (act,) * (len(ws) - 1))


def train_mlp(data: Dataset, cfg: TrainConfig):
    """Fit an MLP; returns ``(model, history)`` at the best validation loss.

    Without a validation split the training loss selects the checkpoint.
    """
    X, Y = data.subset("train")
    if X.shape[0] == 0:
        raise ConfigurationError("dataset has no training rows")
    Xv, Yv = data.subset("val")
    if Xv.shape[0] == 0:
        Xv, Yv = X, Y

    x_mean, x_std = X.mean(axis=0), X.std(axis=0)
    x_std = np.where(x_std > 0, x_std, 1.0)
    y_mean, y_std = Y.mean(axis=0), Y.std(axis=0)
    y_std = np.where(y_std > 0, y_std, 1.0)
    Xs, Ys = (X - x_mean) / x_std, (Y - y_mean) / y_std
    Xvs = (Xv - x_mean) / x_std

    rng = np.random.default_rng(cfg.seed)
    dims = [X.shape[1], *cfg.hidden_dims, Y.shape[1]]
    params = _init_params(dims, rng)
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    act = cfg.activation
    N = Xs.shape[0]
    step = 0

    history = TrainHistory()
    best_val, best_params, since_best = np.inf, [p.copy() for p in params], 0

    for epoch in range(cfg.epochs):
        if cfg.lr_schedule == "cosine":
            frac = epoch / max(1, cfg.epochs - 1)
            lr = cfg.min_learning_rate + 0.5 * (cfg.learning_rate - cfg.min_learning_rate) * (
                1.0 + math.cos(math.pi * frac)
            )
        else:
            lr = cfg.learning_rate
        order = rng.permutation(N)
        for start in range(0, N, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            out, caches = _forward(params, Xs[idx], act)
            err = (2.0 / (idx.size * Ys.shape[1])) * (out - Ys[idx])
            grads = _backward(params, caches, err)
            step += 1
            c1 = 1.0 - beta1**step
            c2 = 1.0 - beta2**step
            for p, g, a, v in zip(params, grads, m1, m2):
                a *= beta1
                a += (1.0 - beta1) * g
                v *= beta2
                v += (1.0 - beta2) * g * g
                p -= lr * (a / c1) / (np.sqrt(v / c2) + eps)

        train_out, _ = _forward(params, Xs, act)
        train_mse = float(np.mean(((train_out - Ys) * y_std) ** 2))
        val_out, _ = _forward(params, Xvs, act)
        val_mse = float(np.mean((val_out * y_std + y_mean - Yv) ** 2))
        if not (math.isfinite(train_mse) and math.isfinite(val_mse)):
            raise TrainingError("loss is not finite", epoch=epoch)
        history.epochs.append(epoch)
        history.train_mse.append(train_mse)
        history.val_mse.append(val_mse)
        if val_mse < best_val:
            best_val, best_params, since_best = val_mse, [p.copy() for p in params], 0
            history.best_epoch = epoch
        else:
            since_best += 1
            if since_best >= cfg.early_stop_patience:
                break

    return _export(best_params, act, x_mean, x_std, y_mean, y_std), history


def fit_metrics(pred, target) -> dict:
    """Pearson R and max relative error per output, MSE over all entries."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.ndim == 1:
        pred = pred[:, None]
    if target.ndim == 1:
        target = target[:, None]
    if pred.shape != target.shape:
        raise ConfigurationError(f"shape mismatch: {pred.shape} vs {target.shape}")
    r = []
    for j in range(target.shape[1]):
        t = target[:, j] - target[:, j].mean()
        p = pred[:, j] - pred[:, j].mean()
        tt, pp = t @ t, p @ p
        if tt <= 0.0:
            raise MetricError(f"output {j}: target has zero variance, Pearson R undefined")
        if pp <= 0.0:
            raise MetricError(f"output {j}: prediction has zero variance, Pearson R undefined")
        r.append(float(np.clip((t @ p) / math.sqrt(tt * pp), -1.0, 1.0)))
    rel = []
    for j in range(target.shape[1]):
        mask = np.abs(target[:, j]) > 1e-12
        if mask.any():
            rel.append(float(np.max(np.abs(pred[mask, j] - target[mask, j]) / np.abs(target[mask, j]))))
        else:
            rel.append(float("nan"))
    return {
        "pearson_r": np.array(r),
        "mse": float(np.mean((pred - target) ** 2)),
        "max_relative_error": np.array(rel),
    }


# dataset files -----------------------------------------------------------------


def write_dataset(data: Dataset, path) -> None:
    """CSV with header ``x1..xn,y1..ym,split``; floats written with ``repr``."""
    n, m = data.n_inputs, data.n_outputs
    header = [f"x{i + 1}" for i in range(n)] + [f"y{j + 1}" for j in range(m)] + ["split"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, y, s in zip(data.inputs, data.targets, data.split):
            w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y] + [s])


def _parse_header(header, path):
    xs = [h for h in header if h.startswith("x")]
    ys = [h for h in header if h.startswith("y")]
    n, m = len(xs), len(ys)
    expected = [f"x{i + 1}" for i in range(n)] + [f"y{j + 1}" for j in range(m)] + ["split"]
    for name in expected:
        if name not in header:
            raise ParseError(f"missing column {name!r}", line=1, path=path)
    if n == 0:
        raise ParseError("missing column 'x1'", line=1, path=path)
    if m == 0:
        raise ParseError("missing column 'y1'", line=1, path=path)
    if header != expected:
        extra = [h for h in header if h not in expected]
        if extra:
            raise ParseError(f"unexpected column {extra[0]!r}", line=1, path=path)
        raise ParseError(f"columns out of order; expected {','.join(expected)}", line=1, path=path)
    return n, m


def read_dataset(path) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file (no header)", line=1, path=path)
        n, m = _parse_header(header, path)
        X, Y, S = [], [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != n + m + 1:
                raise ParseError(
                    f"expected {n + m + 1} fields, got {len(row)}", line=line, path=path
                )
            try:
                vals = [float(v) for v in row[: n + m]]
            except ValueError as exc:
                raise ParseError(str(exc), line=line, path=path) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite value", line=line, path=path)
            if row[-1] not in SPLITS:
                raise ParseError(f"unknown split tag {row[-1]!r}", line=line, path=path)
            X.append(vals[:n])
            Y.append(vals[n:])
            S.append(row[-1])
    return Dataset(
        np.array(X, dtype=float).reshape(-1, n),
        np.array(Y, dtype=float).reshape(-1, m),
        np.array(S, dtype=object),
    )
