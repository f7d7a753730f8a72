"""
Toy minimization: train an encoding-free circuit so that x = pi * <Z^{(x)4}> minimizes
L(x) = sin(x / 2) + sin(2.25 sin(4x)) on [-pi, pi].
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from modules.circuit import TOY_OUTPUT_SCALE, TOY_SPEC, ParamCircuit, build_layered
from modules.simulator import ExecutionMode, PauliZObservable, run_batch
from modules.training import Trainer, TrainConfig, TrainingData, TrainReport, toy_loss
from utils.datasets import Dataset, Task

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToyLandscape:
    x_star: float
    loss_star: float
    local_x: float
    local_loss: float


def scan_landscape(n_points: int = 10 ** 6) -> ToyLandscape:
    """Brute-force grid over [-pi, pi]: global minimum and the runner-up local minimum"""
    x = np.linspace(-math.pi, math.pi, n_points)
    loss = toy_loss(x)
    interior = np.flatnonzero((loss[1:-1] < loss[:-2]) & (loss[1:-1] <= loss[2:])) + 1
    ranked = interior[np.argsort(loss[interior])]
    best = int(np.argmin(loss))
    runner_up = next(i for i in ranked if abs(x[i] - x[best]) > 1e-3)
    return ToyLandscape(float(x[best]), float(loss[best]), float(x[runner_up]), float(loss[runner_up]))


def _toy_data(batch_size: int) -> TrainingData:
    """The toy problem has no inputs: a batch is `batch_size` copies of the empty data point"""
    def copies(n):
        return Dataset(features=np.zeros((n, 0)), targets=np.zeros((n, 1)), task=Task.TOY)
    return TrainingData(train=copies(batch_size), val=copies(1), test=copies(0))


def run_toy(cfg: TrainConfig, circuit: ParamCircuit | None = None) -> tuple[pd.DataFrame, TrainReport]:
    """Train on L(x); returns the convergence path (step, x, loss) and the training report"""
    circuit = circuit or build_layered(TOY_SPEC)
    observables = [PauliZObservable.full(circuit.n_qubits)]
    trainer = Trainer(cfg, _toy_data(cfg.batch_size), circuit, observables)
    report = trainer.run()

    path = np.stack([report.initial_params] + report.trajectory)
    values, _ = run_batch(circuit, np.zeros((1, 0)), path, observables, ExecutionMode.ideal())
    x = TOY_OUTPUT_SCALE * values[:, 0]
    trajectory = pd.DataFrame({"step": np.arange(len(path)), "x": x, "loss": toy_loss(x)})
    logger.info("toy run: L %.4f -> %.4f (x %.4f -> %.4f), %d gradient evaluations",
                trajectory["loss"].iloc[0], trajectory["loss"].iloc[-1],
                x[0], x[-1], report.grad_evals)
    return trajectory, report


def toy_minimize(cfg: TrainConfig, circuit: ParamCircuit | None = None) -> pd.DataFrame:
    """Convergence path of a toy run"""
    return run_toy(cfg, circuit)[0]
