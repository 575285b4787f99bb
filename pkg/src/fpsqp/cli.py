"""Command-line front end.

Subcommands::

    fpsqp sample FUNCTION N_TRAIN N_VAL N_TEST [--range LO HI] [--seed S] [-o CSV]
    fpsqp train DATASET [--config JSON] [--seed S] [--epochs N] [-o MODEL] [--history CSV]
    fpsqp check-grad MODEL [--points N] [--seed S] [--range LO HI]
    fpsqp optimize CONFIG [--x0 ...] [--tol T] [--max-iter N] [--log CSV] [--summary TXT]
    fpsqp report CSV [--svg PATH]

Exit codes: 0 success, 1 usage or configuration error, 2 I/O or parse error,
3 numeric or solver failure. ``FPSQP_SEED`` sets the default seed; flags
override config files, which override built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from fpsqp.errors import (
    ConfigurationError,
    DescentError,
    MetricError,
    NumericError,
    ParseError,
    ShapeError,
    StructureError,
    TrainingError,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def default_seed() -> int:
    raw = os.environ.get("FPSQP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"FPSQP_SEED must be an integer, got {raw!r}", EXIT_USAGE) from None


def _seed(args) -> int:
    return default_seed() if args.seed is None else args.seed


# sample ---------------------------------------------------------------------


def cmd_sample(args) -> int:
    from fpsqp.benchmark import sample_dataset
    from fpsqp.problem.functions import TEST_FUNCTIONS
    from fpsqp.train import write_dataset

    if args.function not in TEST_FUNCTIONS:
        raise CliError(
            f"unknown function {args.function!r}; choose from {', '.join(sorted(TEST_FUNCTIONS))}",
            EXIT_USAGE,
        )
    if args.n_train < 1:
        raise CliError("n_train must be at least 1", EXIT_USAGE)
    if args.n_val < 0 or args.n_test < 0:
        raise CliError("n_val and n_test must be non-negative", EXIT_USAGE)
    data = sample_dataset(args.function, args.n_train, args.n_val, args.n_test,
                          tuple(args.range), _seed(args))
    out = args.output or f"{args.function}.csv"
    write_dataset(data, out)
    print(f"wrote {len(data)} rows ({args.n_train}/{args.n_val}/{args.n_test}) to {out}")
    return EXIT_OK


# train ----------------------------------------------------------------------


def cmd_train(args) -> int:
    from fpsqp.surrogate import save_model
    from fpsqp.train import TrainConfig, fit_metrics, read_dataset, train_mlp

    data = read_dataset(args.dataset)
    doc = {}
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, path=args.config) from None
        if not isinstance(doc, dict):
            raise ConfigurationError(f"{args.config}: training config must be a JSON object")
    if args.seed is not None or "seed" not in doc:
        doc["seed"] = _seed(args)
    if args.epochs is not None:
        doc["epochs"] = args.epochs
    cfg = TrainConfig.from_dict(doc)

    model, history = train_mlp(data, cfg)
    out = Path(args.output)
    save_model(model, out)
    hist = Path(args.history) if args.history else out.with_name(out.stem + "_history.csv")
    history.write_csv(hist)
    print(f"model written to {out}; history to {hist}; best epoch {history.best_epoch}")
    Xt, Yt = data.subset("test")
    if Xt.shape[0] >= 2:
        try:
            m = fit_metrics(model.predict(Xt), Yt)
        except MetricError as exc:
            print(f"test metrics unavailable: {exc}")
        else:
            r = ", ".join(f"{v:.6f}" for v in m["pearson_r"])
            print(f"test split: R = [{r}]  mse = {m['mse']:.6g}")
    return EXIT_OK


# check-grad -----------------------------------------------------------------


def cmd_check_grad(args) -> int:
    from fpsqp.problem.sampling import lhs_sample
    from fpsqp.surrogate import load_model
    from fpsqp.surrogate.check import check_derivatives

    if args.points < 1:
        raise CliError("--points must be at least 1", EXIT_USAGE)
    model = load_model(args.model)
    pts = lhs_sample(args.points, model.n_inputs, tuple(args.range), seed=_seed(args))
    res = check_derivatives(model, pts)
    ok = res.passed(args.grad_tol, args.hess_tol)
    print(f"model: {args.model} ({model.kind}, {model.n_inputs} -> {model.n_outputs})")
    print(f"points checked: {res.n_points}")
    print(f"gradient max rel error: {res.grad_error:.3e} (tol {args.grad_tol:g})")
    print(f"hessian  max rel error: {res.hess_error:.3e} (tol {args.hess_tol:g})")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERIC


# optimize -------------------------------------------------------------------


def format_summary(report, cfg, true_value=None, distance=None) -> str:
    lines = [
        f"status: {report.status}",
        f"iterations: {len(report.records)}",
        "x_final: [" + ", ".join(f"{v:.6g}" for v in report.x_final) + "]",
        "y_final: [" + ", ".join(f"{v:.6g}" for v in report.y_final) + "]",
        f"f_final: {report.f_final:.10g}",
        f"violation: {report.violation_final:.3e}",
        f"solve_time_s: {report.solve_time_s:.6f}",
    ]
    if true_value is not None:
        lines.append(f"true_function: {cfg.test_function}")
        lines.append(f"true_value: {true_value:.10g}")
        lines.append(f"distance_to_minimizer: {distance:.6g}")
    if report.message:
        lines.append(f"message: {report.message}")
    return "\n".join(lines) + "\n"


def cmd_optimize(args) -> int:
    from fpsqp.problem.config import load_problem_config
    from fpsqp.problem.functions import TEST_FUNCTIONS
    from fpsqp.sqp import SolverOptions, solve, write_convergence_csv
    from fpsqp.surrogate import load_model

    cfg = load_problem_config(args.config)
    solver = dict(cfg.solver)
    if args.tol is not None:
        solver["tol"] = args.tol
    if args.max_iter is not None:
        solver["max_outer_iter"] = args.max_iter
    opts = SolverOptions(**solver)
    x0 = cfg.x0 if args.x0 is None else np.asarray(args.x0, dtype=float)
    if x0.shape != cfg.x0.shape:
        raise CliError(f"--x0 needs {cfg.x0.shape[0]} values", EXIT_USAGE)

    model = load_model(cfg.model_path)
    problem = cfg.to_nlp()
    if model.n_inputs != problem.n or model.n_outputs != problem.m:
        raise ConfigurationError(
            f"model maps {model.n_inputs} -> {model.n_outputs} but the config has "
            f"{problem.n} inputs and {problem.m} output costs"
        )
    if not problem.in_bounds(x0):
        raise ConfigurationError("x0 lies outside x_bounds")

    t0 = time.perf_counter()
    report = solve(problem, model, x0, opts)
    wall = time.perf_counter() - t0
    report.solve_time_s = wall

    write_convergence_csv(report.records, args.log)
    true_value = distance = None
    if cfg.test_function is not None:
        tf = TEST_FUNCTIONS[cfg.test_function]
        true_value = tf(report.x_final)
        distance = tf.distance_to_minimizer(report.x_final)
    text = format_summary(report, cfg, true_value, distance)
    sys.stdout.write(text)
    if args.summary:
        Path(args.summary).write_text(text, encoding="utf-8")
    return EXIT_OK if report.converged else EXIT_NUMERIC


# report ---------------------------------------------------------------------


def render_table(records) -> str:
    head = f"{'iter':>5} {'f':>14} {'merit':>14} {'step_norm':>11} {'alpha':>9} {'violation':>11} {'ms':>9}"
    rows = [head, "-" * len(head)]
    for r in records:
        rows.append(
            f"{r.iter:>5d} {r.f:>14.6g} {r.merit:>14.6g} {r.step_norm:>11.3e} "
            f"{r.alpha:>9.4g} {r.violation:>11.3e} {r.elapsed_ms:>9.3f}"
        )
    return "\n".join(rows) + "\n"


def render_svg(records, width=640, height=360) -> str:
    """Two polylines (f and violation vs iteration), each scaled to its own range."""
    pad = 40
    iters = np.array([r.iter for r in records], dtype=float)
    series = [("f", "#1f77b4", np.array([r.f for r in records])),
              ("violation", "#d62728", np.array([r.violation for r in records]))]
    x_lo, x_hi = iters.min(), iters.max()
    x_span = x_hi - x_lo or 1.0

    def sx(v):
        return pad + (v - x_lo) / x_span * (width - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" font-size="12">iteration</text>',
    ]
    for k, (name, color, vals) in enumerate(series):
        lo, hi = float(vals.min()), float(vals.max())
        span = hi - lo or 1.0
        pts = " ".join(
            f"{sx(i):.2f},{height - pad - (v - lo) / span * (height - 2 * pad):.2f}"
            for i, v in zip(iters, vals)
        )
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        parts.append(
            f'<text x="{width - pad}" y="{pad - 20 + 14 * k}" text-anchor="end" font-size="12" '
            f'fill="{color}">{name} [{lo:.4g}, {hi:.4g}]</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_report(args) -> int:
    from fpsqp.sqp import read_convergence_csv

    records = read_convergence_csv(args.csv)
    if not records:
        print("no iterations")
        return EXIT_OK
    sys.stdout.write(render_table(records))
    if args.svg:
        Path(args.svg).write_text(render_svg(records), encoding="utf-8")
        print(f"chart written to {args.svg}")
    return EXIT_OK


# entry point ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message, EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fpsqp", description="Surrogate-based feasible-path SQP toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="Latin-hypercube sample a built-in test function")
    s.add_argument("function")
    s.add_argument("n_train", type=int)
    s.add_argument("n_val", type=int)
    s.add_argument("n_test", type=int)
    s.add_argument("--range", nargs=2, type=float, default=(-2.0, 2.0), metavar=("LO", "HI"))
    s.add_argument("--seed", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sample)

    t = sub.add_parser("train", help="fit an MLP surrogate to a dataset CSV")
    t.add_argument("dataset")
    t.add_argument("--config", help="JSON file of TrainConfig fields")
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("-o", "--output", default="model.json")
    t.add_argument("--history")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("check-grad", help="compare model derivatives with finite differences")
    c.add_argument("model")
    c.add_argument("--points", type=int, default=20)
    c.add_argument("--seed", type=int)
    c.add_argument("--range", nargs=2, type=float, default=(-2.0, 2.0), metavar=("LO", "HI"))
    c.add_argument("--grad-tol", type=float, default=1e-5)
    c.add_argument("--hess-tol", type=float, default=1e-3)
    c.set_defaults(func=cmd_check_grad)

    o = sub.add_parser("optimize", help="run the SQP solver on a problem config")
    o.add_argument("config")
    o.add_argument("--x0", nargs="+", type=float)
    o.add_argument("--tol", type=float)
    o.add_argument("--max-iter", type=int)
    o.add_argument("--log", default="convergence.csv", help="convergence CSV output")
    o.add_argument("--summary", help="also write the summary to this file")
    o.set_defaults(func=cmd_optimize)

    r = sub.add_parser("report", help="tabulate (and optionally chart) a convergence CSV")
    r.add_argument("csv")
    r.add_argument("--svg")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigurationError, ShapeError, StructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, DescentError, TrainingError, MetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
