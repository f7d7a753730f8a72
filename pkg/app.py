"""
Guided-SPSA lab command line.

    python app.py train --config configs/friedman_guided_ideal.json
    python app.py toy --config configs/toy_guided.json
    python app.py gradcheck --config configs/friedman_ps_ideal.json
    python app.py count --config configs/boston_guided_ideal.json
    python app.py plot --run runs/friedman_guided_ideal
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np
from tqdm import tqdm

from modules.errors import ConfigError, LabError, NumericFaultError
from modules.gradients import (
    SpsaConfig,
    finite_diff_jacobian,
    param_shift_jacobian,
    relative_frobenius_error,
    spsa_jacobian,
)
from modules.toy_problem import run_toy
from modules.training import EstimatorConfig, EstimatorKind, predict_counts, train
from utils.config import (
    DatasetSource,
    RunConfig,
    build_circuit,
    build_observables,
    dataset_shape,
    load_config,
    load_training_data,
)
from utils.datasets import Task
from utils.figures import render_run
from utils.reporting import write_run, write_toy

logger = logging.getLogger("app")

EXIT_OK = 0
EXIT_GRADCHECK = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | None = None):
    """Explicit level first, then GSPSA_LOG_LEVEL, then INFO"""
    level = (level or os.getenv("GSPSA_LOG_LEVEL") or "INFO").upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigError(f"unknown log level {level!r}")
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, output_dir=args.out)


def cmd_train(args) -> int:
    cfg = _resolve(args)
    if cfg.task is Task.TOY:
        raise ConfigError("task: toy configs run through the 'toy' command")
    train_cfg = cfg.train_config()
    data = load_training_data(cfg)
    circuit = build_circuit(cfg, data.train.n_features)
    observables = build_observables(cfg, circuit)
    predicted = predict_counts(train_cfg, len(data.train), len(data.val), len(data.test), circuit)
    logger.info("%s: %d qubits, %d parameters, %d/%d/%d samples, predicted %d circuit evaluations",
                cfg.name, circuit.n_qubits, circuit.n_params,
                len(data.train), len(data.val), len(data.test), predicted.total)

    report = train(train_cfg, data, circuit, observables, workers=args.workers)
    report.config = cfg.to_dict()
    extra = {
        "batch_size": train_cfg.batch_size,
        "n_params": circuit.n_params,
        "samples": {"train": len(data.train), "val": len(data.val), "test": len(data.test)},
        "predicted_counters": dataclasses.asdict(predicted) | {"total": predicted.total},
    }
    write_run(cfg.output_dir, report, report.config, extra, task=cfg.task)
    summary = report.summary()
    print(f"{cfg.name}: convergence epoch {summary['convergence_epoch']}, "
          f"best val {summary['best_val_metric']:.6g}, test {summary['test_metric']}, "
          f"circuits {summary['counters']['total']} -> {cfg.output_dir}")
    return EXIT_OK


def cmd_toy(args) -> int:
    cfg = _resolve(args)
    if cfg.task is not Task.TOY:
        raise ConfigError(f"task: the 'toy' command needs task 'toy', got {cfg.task.value!r}")
    circuit = build_circuit(cfg, 0)
    trajectory, report = run_toy(cfg.train_config(), circuit)
    report.config = cfg.to_dict()
    write_toy(cfg.output_dir, trajectory, report, report.config)
    print(f"{cfg.name}: L {trajectory['loss'].iloc[0]:.6f} -> {trajectory['loss'].iloc[-1]:.6f} "
          f"at x = {trajectory['x'].iloc[-1]:.6f} -> {cfg.output_dir}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    cfg = _resolve(args)
    mode = cfg.mode.to_mode()
    if not mode.is_ideal:
        print(f"{cfg.name}: gradcheck skipped, {mode.kind.value} mode is stochastic")
        return EXIT_OK

    data = None if cfg.dataset.source is DatasetSource.NONE else load_training_data(cfg)
    circuit = build_circuit(cfg, 0 if data is None else data.train.n_features)
    observables = build_observables(cfg, circuit)
    check = cfg.gradcheck
    rng = np.random.default_rng(check.seed)

    worst = 0.0
    ps_jac = inputs = params = None
    for _ in tqdm(range(check.draws), desc="gradcheck", disable=None, leave=False):
        params = rng.uniform(-np.pi, np.pi, size=circuit.n_params)
        inputs = (np.zeros(0) if data is None
                  else data.train.features[rng.integers(len(data.train))])
        ps_jac, _ = param_shift_jacobian(circuit, inputs, params, observables, mode)
        fd_jac = finite_diff_jacobian(circuit, inputs, params, observables, check.h)
        worst = max(worst, float(np.max(np.abs(ps_jac - fd_jac))))

    spsa_cfg = SpsaConfig(k=check.spsa_samples, c=check.c)
    spsa_jac, _ = spsa_jacobian(circuit, inputs, params, observables, spsa_cfg, mode, rng)
    spsa_error = relative_frobenius_error(spsa_jac, ps_jac)

    print(f"{cfg.name}: max |PS - FD| = {worst:.3e} over {check.draws} draws "
          f"(tolerance {check.tolerance:.1e}); SPSA k={check.spsa_samples} relative error {spsa_error:.4f}")
    if worst >= check.tolerance:
        logger.error("parameter-shift Jacobian deviates from finite differences by %.3e", worst)
        return EXIT_GRADCHECK
    return EXIT_OK


def cmd_count(args) -> int:
    cfg = _resolve(args)
    train_cfg = cfg.train_config()
    if cfg.task is Task.TOY:
        n_train, n_val, n_test = train_cfg.batch_size, 1, 0
        circuit = build_circuit(cfg, 0)
    else:
        shape = dataset_shape(cfg)
        n_train, n_val, n_test = shape.n_train, shape.n_val, shape.n_test
        circuit = build_circuit(cfg, shape.n_features)

    predicted = predict_counts(train_cfg, n_train, n_val, n_test, circuit)
    baseline_cfg = dataclasses.replace(train_cfg, estimator=EstimatorConfig(kind=EstimatorKind.PARAM_SHIFT))
    baseline = predict_counts(baseline_cfg, n_train, n_val, n_test, circuit)
    ratio = predicted.grad_evals / baseline.grad_evals

    print(f"{cfg.name}: {cfg.estimator.kind.value}, {train_cfg.epochs} epochs, batch {train_cfg.batch_size}, "
          f"{n_train}/{n_val}/{n_test} samples, {circuit.n_params} parameters")
    print(f"  gradient evaluations  {predicted.grad_evals}")
    print(f"  forward evaluations   {predicted.forward_evals}")
    print(f"  validation            {predicted.val_evals}")
    print(f"  test                  {predicted.test_evals}")
    print(f"  total                 {predicted.total}")
    if predicted.histogram_evals:
        print(f"  histogram snapshots   {predicted.histogram_evals}")
    print(f"  gradient ratio vs parameter shift  {ratio:.4f} ({1.0 - ratio:.1%} fewer)")
    return EXIT_OK


def cmd_plot(args) -> int:
    if not Path(args.run).is_dir():
        raise ConfigError(f"run directory not found: {args.run}")
    written = render_run(args.run, args.out)
    if not written:
        raise ConfigError(f"{args.run} holds no run files to plot")
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gspsa", description="Guided-SPSA variational circuit training lab")
    sub = parser.add_subparsers(dest="command", required=True)

    commands = {
        "train": (cmd_train, "train a circuit on a dataset"),
        "toy": (cmd_toy, "minimize the toy landscape"),
        "gradcheck": (cmd_gradcheck, "compare parameter-shift against finite differences"),
        "count": (cmd_count, "predict circuit evaluations without simulating"),
    }
    for name, (handler, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, default=None, help="training seed (overrides training.seed)")
        p.add_argument("--workers", type=int, default=1, help="threads evaluating a batch")
        p.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
        p.set_defaults(handler=handler)

    p = sub.add_parser("plot", help="render HTML figures for a finished run")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--out", default=None, help="figure directory (default <run>/figures)")
    p.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    p.set_defaults(handler=cmd_plot)
    return parser


def main(argv=None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
        if getattr(args, "seed", None) is not None and args.seed < 0:
            raise ConfigError(f"--seed must be non-negative, got {args.seed}")
        if getattr(args, "workers", 1) < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}")
        return args.handler(args)
    except NumericFaultError as exc:
        logger.error("numeric fault: %s", exc)
        print(f"error: numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
