"""Sample, train and optimize pipeline for the built-in test functions.

Every function uses the same fixed setup:

* Latin hypercube splits of 2000 / 50 / 200 points over [-2, 2]^n,
  one independent design per split, seeded from ``BENCHMARK_SEED``.
* A 64x64 Swish MLP trained with :data:`BENCHMARK_TRAIN_CONFIG`.
* ``min y`` with ``y = s(x)`` over the box [-2, 2]^n from ``x_i = 2``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from fpsqp.problem.functions import TEST_FUNCTIONS, evaluate_batch, get_test_function
from fpsqp.problem.nlp import LinearFunction, NlpProblem
from fpsqp.problem.sampling import lhs_sample
from fpsqp.sqp import SolveReport, SolverOptions, solve
from fpsqp.train import Dataset, TrainConfig, fit_metrics, train_mlp

BENCHMARK_SEED = 0
SPLIT_SIZES = (2000, 50, 200)
DOMAIN = (-2.0, 2.0)
START_VALUE = 2.0
BENCHMARK_TRAIN_CONFIG = TrainConfig(
    hidden_dims=(64, 64),
    activation="swish",
    learning_rate=1e-3,
    epochs=5000,
    batch_size=64,
    seed=BENCHMARK_SEED,
    early_stop_patience=200,
)


def sample_dataset(name: str, n_train: int, n_val: int, n_test: int, bounds=DOMAIN, seed=0) -> Dataset:
    """LHS design per split (seeds spawned from ``seed``), labelled with the true function."""
    dim = get_test_function(name).dim
    children = np.random.SeedSequence(seed).spawn(3)
    blocks, tags = [], []
    for tag, k, child in zip(("train", "val", "test"), (n_train, n_val, n_test), children):
        if k == 0:
            continue
        blocks.append(lhs_sample(k, dim, bounds, seed=child))
        tags += [tag] * k
    X = np.vstack(blocks)
    return Dataset(X, evaluate_batch(name, X), np.array(tags, dtype=object))


def benchmark_problem(name: str, bounds=DOMAIN) -> NlpProblem:
    """``min y`` over the box, with ``y`` the surrogate of ``name``."""
    n = get_test_function(name).dim
    lo, hi = bounds
    return NlpProblem(n, 1, LinearFunction(np.zeros(n), [1.0]), x_bounds=([lo] * n, [hi] * n))


@dataclass
class BenchmarkResult:
    name: str
    model: object
    pearson_r: float
    test_mse: float
    train_time_s: float
    report: SolveReport
    distance: float
    gap: float

    def summary(self) -> str:
        return (
            f"{self.name}: R={self.pearson_r:.5f} status={self.report.status} "
            f"iters={len(self.report.records)} dist={self.distance:.4f} gap={self.gap:.4g} "
            f"solve={self.report.solve_time_s:.4f}s train={self.train_time_s:.1f}s"
        )


def run_benchmark(name: str, seed: int = BENCHMARK_SEED, cfg: TrainConfig | None = None,
                  opts: SolverOptions | None = None) -> BenchmarkResult:
    """Sample, train, and solve from ``x_i = 2``; scores use the true function."""
    tf = TEST_FUNCTIONS[name]
    cfg = cfg or BENCHMARK_TRAIN_CONFIG
    data = sample_dataset(name, *SPLIT_SIZES, bounds=DOMAIN, seed=seed)
    t0 = time.perf_counter()
    model, _ = train_mlp(data, cfg)
    train_time = time.perf_counter() - t0
    Xt, Yt = data.subset("test")
    metrics = fit_metrics(model.predict(Xt), Yt)

    report = solve(benchmark_problem(name), model, np.full(tf.dim, START_VALUE), opts)
    return BenchmarkResult(
        name=name,
        model=model,
        pearson_r=float(metrics["pearson_r"][0]),
        test_mse=metrics["mse"],
        train_time_s=train_time,
        report=report,
        distance=tf.distance_to_minimizer(report.x_final),
        gap=tf(report.x_final) - tf.known_min_value,
    )
