"""
Training loops for variational circuits.

`train_baseline` differentiates every sample of a batch with one estimator
(parameter shift or SPSA). `train_guided` splits each batch: a tau share is
differentiated exactly, the rest with SPSA whose Jacobian rows are rescaled to
epsilon times the average parameter-shift row norm, while the SPSA sample count
grows linearly over the epochs.

Per-sample Jacobians J_m are chained with the loss derivative e_m = dL/df_m
(which already carries the 1/B batch average): g = sum_m J_m^T e_m.

Every random draw comes from a stream keyed by (seed, purpose, epoch, batch,
sample), so results do not depend on how many workers evaluate a batch.
Gradient histograms come from a snapshot over the whole training set taken
before an epoch's first update, on streams of their own.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from modules.circuit import TOY_OUTPUT_SCALE, ParamCircuit
from modules.errors import ConfigError, HistogramLookupError, NumericFaultError
from modules.gradients import (
    SpsaConfig,
    avg_ps_norm,
    draw_directions,
    make_schedule,
    param_shift_jacobian,
    spsa_jacobian,
    suppress,
)
from modules.optimizers import OptimizerKind, make_optimizer
from modules.simulator import ExecutionMode, PauliZObservable, run_batch
from utils.datasets import Dataset, Task

logger = logging.getLogger(__name__)

HIST_RANGE = 0.5
HIST_BINS = 101
HIST_EDGES = np.linspace(-HIST_RANGE, HIST_RANGE, HIST_BINS + 1)

# Spawn-key tags for the random streams
(_SHUFFLE, _GRADIENT, _FORWARD, _VALIDATION, _INIT, _DIRECTIONS, _TEST,
 _SNAPSHOT, _SNAPSHOT_DIRECTIONS) = range(9)


class EstimatorKind(str, Enum):
    PARAM_SHIFT = "param_shift"
    SPSA = "spsa"
    GUIDED = "guided"


class InitKind(str, Enum):
    UNIFORM_ZERO_PI = "uniform_zero_pi"
    ZEROS = "zeros"


class ClassificationLoss(str, Enum):
    BCE = "bce"
    MSE = "mse"


@dataclass(frozen=True)
class EstimatorConfig:
    kind: EstimatorKind = EstimatorKind.PARAM_SHIFT
    k: int = 10
    c: float = 0.05
    tau: float = 0.5
    epsilon: float | None = None
    share_directions: bool = False

    def __post_init__(self):
        if self.kind is EstimatorKind.PARAM_SHIFT:
            return
        SpsaConfig(self.k, self.c, self.share_directions)
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau}")
        if self.epsilon is not None and not 0.0 < self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    def resolved_epsilon(self, mode: ExecutionMode) -> float:
        """Explicit epsilon, else 1.0 on the exact simulator and 0.5 under sampling"""
        if self.epsilon is not None:
            return self.epsilon
        return 1.0 if mode.is_ideal else 0.5


@dataclass(frozen=True)
class TrainConfig:
    task: Task = Task.REGRESSION
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.01
    optimizer: OptimizerKind = OptimizerKind.ADAM
    mode: ExecutionMode = field(default_factory=ExecutionMode.ideal)
    init: InitKind = InitKind.UNIFORM_ZERO_PI
    seed: int = 0
    init_seed: int | None = None
    classification_loss: ClassificationLoss = ClassificationLoss.BCE
    histogram_epochs: tuple[int, ...] = ()
    validate_ideal: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.seed < 0 or (self.init_seed is not None and self.init_seed < 0):
            raise ConfigError("seeds must be non-negative integers")
        object.__setattr__(self, "histogram_epochs", tuple(int(e) for e in self.histogram_epochs))


@dataclass(frozen=True)
class TrainingData:
    train: Dataset
    val: Dataset
    test: Dataset


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_metric: float
    grad_evals: int
    forward_evals: int
    val_evals: int
    k_epoch: int


@dataclass
class TrainReport:
    config: dict
    records: list[EpochRecord] = field(default_factory=list)
    histograms: dict[int, np.ndarray] = field(default_factory=dict)
    trajectory: list[np.ndarray] = field(default_factory=list)
    initial_params: np.ndarray | None = None
    test_metric: float | None = None
    test_accuracy: float | None = None
    test_evals: int = 0
    histogram_evals: int = 0
    test_predictions: np.ndarray | None = None
    test_targets: np.ndarray | None = None

    @property
    def final_params(self) -> np.ndarray:
        return self.trajectory[-1] if self.trajectory else self.initial_params

    @property
    def convergence_epoch(self) -> int:
        return int(np.argmin([r.val_metric for r in self.records]))

    @property
    def grad_evals(self) -> int:
        return self.records[-1].grad_evals if self.records else 0

    @property
    def forward_evals(self) -> int:
        return self.records[-1].forward_evals if self.records else 0

    @property
    def val_evals(self) -> int:
        return self.records[-1].val_evals if self.records else 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records],
                            columns=["epoch", "train_loss", "val_metric", "grad_evals",
                                     "forward_evals", "val_evals", "k_epoch"])

    def summary(self) -> dict:
        best = self.records[self.convergence_epoch]
        return {
            "convergence_epoch": self.convergence_epoch,
            "best_val_metric": best.val_metric,
            "final_train_loss": self.records[-1].train_loss,
            "test_metric": self.test_metric,
            "test_accuracy": self.test_accuracy,
            "counters": {
                "grad_evals": self.grad_evals,
                "forward_evals": self.forward_evals,
                "val_evals": self.val_evals,
                "test_evals": self.test_evals,
                "histogram_evals": self.histogram_evals,
                "total": self.grad_evals + self.forward_evals + self.val_evals + self.test_evals,
            },
        }


# ---------------------------------------------------------------------------
# Losses and metrics
# ---------------------------------------------------------------------------

def toy_loss(x):
    """L(x) = sin(x / 2) + sin(2.25 sin(4x))"""
    x = np.asarray(x, dtype=float)
    return np.sin(x / 2.0) + np.sin(2.25 * np.sin(4.0 * x))


def toy_loss_derivative(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * np.cos(x / 2.0) + 9.0 * np.cos(2.25 * np.sin(4.0 * x)) * np.cos(4.0 * x)


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


def loss_and_error(task: Task, predictions, targets,
                   classification_loss: ClassificationLoss = ClassificationLoss.BCE) -> tuple[float, np.ndarray]:
    """Batch loss and e_m = dLoss/df_m for every sample and observable, shape (B, n_obs)"""
    preds = np.atleast_2d(np.asarray(predictions, dtype=float))
    batch = preds.shape[0]

    if task is Task.TOY:
        x = TOY_OUTPUT_SCALE * preds
        loss = float(np.mean(toy_loss(x[:, 0])))
        errors = TOY_OUTPUT_SCALE * toy_loss_derivative(x) / batch
        return loss, errors

    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if task is Task.REGRESSION:
        if targets.shape[0] != batch:
            raise ConfigError(f"{batch} predictions for {targets.shape[0]} targets")
        diff = preds[:, :1] - targets[:, :1]
        errors = np.zeros_like(preds)
        errors[:, :1] = 2.0 * diff / batch
        return float(np.mean(diff ** 2)), errors

    if targets.shape != preds.shape:
        raise ConfigError(f"{preds.shape[1]} observables cannot decode {targets.shape[1]} classes")
    probs = sigmoid(preds)
    if classification_loss is ClassificationLoss.BCE:
        clipped = np.clip(probs, 1e-12, 1.0 - 1e-12)
        per_sample = -(targets * np.log(clipped) + (1.0 - targets) * np.log(1.0 - clipped)).sum(axis=1)
        return float(per_sample.mean()), (probs - targets) / batch
    diff = probs - targets
    return float((diff ** 2).sum(axis=1).mean()), 2.0 * diff * probs * (1.0 - probs) / batch


def metric(task: Task, predictions, targets) -> float:
    """MAE for regression, error rate for classification, L(x) for the toy problem"""
    preds = np.atleast_2d(np.asarray(predictions, dtype=float))
    if task is Task.TOY:
        return float(np.mean(toy_loss(TOY_OUTPUT_SCALE * preds[:, 0])))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if task is Task.REGRESSION:
        return float(np.mean(np.abs(preds[:, 0] - targets[:, 0])))
    return 1.0 - accuracy(preds, targets)


def accuracy(predictions, targets) -> float:
    return float(np.mean(np.argmax(predictions, axis=1) == np.argmax(targets, axis=1)))


def absolute_error_cdf(predictions, targets, keep: float = 0.97) -> pd.DataFrame:
    """Sorted absolute errors of the best `keep` share of samples with their cumulative fraction"""
    errors = np.sort(np.abs(np.asarray(predictions, dtype=float)[:, 0] - np.asarray(targets, dtype=float)[:, 0]))
    n_keep = max(1, math.floor(keep * errors.size))
    kept = errors[:n_keep]
    return pd.DataFrame({
        "abs_error": kept,
        "cumulative_fraction": np.arange(1, n_keep + 1) / n_keep,
    })


# ---------------------------------------------------------------------------
# Batch partitioning and closed-form evaluation counts
# ---------------------------------------------------------------------------

def batch_sizes(n: int, batch_size: int) -> list[int]:
    return [min(batch_size, n - start) for start in range(0, n, batch_size)]


def ps_share(size: int, tau: float) -> int:
    """Parameter-shift samples in a batch: round-half-up of tau * size, at least 1 when 0 < tau"""
    if tau >= 1.0:
        return size
    if tau <= 0.0:
        return 0
    return min(size, max(1, math.floor(tau * size + 0.5)))


def shift_evals(circuit: ParamCircuit) -> int:
    """Evaluations of one parameter-shift Jacobian"""
    return 2 * circuit.param_columns[0].size


@dataclass(frozen=True)
class CountPrediction:
    grad_evals: int
    forward_evals: int
    val_evals: int
    test_evals: int
    # gradient snapshots behind the histograms; diagnostics, outside the training total
    histogram_evals: int = 0

    @property
    def total(self) -> int:
        return self.grad_evals + self.forward_evals + self.val_evals + self.test_evals


def predict_counts(cfg: TrainConfig, n_train: int, n_val: int, n_test: int,
                   circuit: ParamCircuit) -> CountPrediction:
    """Circuit evaluations a run of `cfg` will spend, without simulating anything"""
    sizes = batch_sizes(n_train, cfg.batch_size)
    per_ps = shift_evals(circuit)
    est = cfg.estimator
    schedule = make_schedule(circuit.n_params, est.tau, cfg.epochs) if est.kind is EstimatorKind.GUIDED else None

    def epoch_cost(epoch: int) -> int:
        if est.kind is EstimatorKind.PARAM_SHIFT:
            return n_train * per_ps
        if est.kind is EstimatorKind.SPSA:
            return n_train * 2 * est.k
        k_epoch = schedule.k_at(epoch)
        cost = 0
        for size in sizes:
            n_ps = ps_share(size, est.tau)
            cost += n_ps * per_ps + (size - n_ps) * 2 * k_epoch
        return cost

    captured = set(cfg.histogram_epochs) & set(range(cfg.epochs))
    return CountPrediction(
        grad_evals=sum(epoch_cost(epoch) for epoch in range(cfg.epochs)),
        forward_evals=cfg.epochs * n_train,
        val_evals=cfg.epochs * n_val,
        test_evals=n_test,
        histogram_evals=sum(epoch_cost(epoch) for epoch in sorted(captured)),
    )


# ---------------------------------------------------------------------------
# Gradient histograms
# ---------------------------------------------------------------------------

def histogram_counts(values) -> np.ndarray:
    """[below -0.5] + 101 equal bins over [-0.5, 0.5] + [above 0.5]"""
    values = np.asarray(values, dtype=float).reshape(-1)
    inner, _ = np.histogram(values, bins=HIST_EDGES)
    return np.concatenate([[np.sum(values < -HIST_RANGE)], inner, [np.sum(values > HIST_RANGE)]])


def gradient_histogram(report: TrainReport, epoch: int) -> pd.DataFrame:
    if epoch not in report.histograms:
        raise HistogramLookupError(f"no gradient histogram captured for epoch {epoch}; "
                                   f"captured: {sorted(report.histograms)}")
    left = np.concatenate([[-np.inf], HIST_EDGES[:-1], [HIST_RANGE]])
    right = np.concatenate([[-HIST_RANGE], HIST_EDGES[1:], [np.inf]])
    return pd.DataFrame({"bin_left": left, "bin_right": right, "count": report.histograms[epoch]})


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def initial_params(cfg: TrainConfig, n_params: int) -> np.ndarray:
    if cfg.init is InitKind.ZEROS:
        return np.zeros(n_params)
    seed = cfg.seed if cfg.init_seed is None else cfg.init_seed
    return _stream(seed, _INIT).uniform(0.0, math.pi, size=n_params)


class Trainer:
    """Runs the epoch/batch loop; the estimator config decides how batches are differentiated"""

    def __init__(self, cfg: TrainConfig, data: TrainingData, circuit: ParamCircuit,
                 observables: Sequence[PauliZObservable], workers: int = 1):
        if len(data.train) == 0:
            raise ConfigError("training set is empty")
        if data.train.n_features != circuit.n_inputs:
            raise ConfigError(f"dataset has {data.train.n_features} features, "
                              f"circuit encodes {circuit.n_inputs}")
        self.cfg = cfg
        self.data = data
        self.circuit = circuit
        self.observables = list(observables)
        self.workers = max(1, int(workers))
        est = cfg.estimator
        self.spsa = None if est.kind is EstimatorKind.PARAM_SHIFT else SpsaConfig(est.k, est.c, est.share_directions)
        self.epsilon = est.resolved_epsilon(cfg.mode)
        self.schedule = None
        if est.kind is EstimatorKind.GUIDED:
            self.schedule = make_schedule(circuit.n_params, est.tau, cfg.epochs, self.epsilon)
            logger.info("guided schedule: k_min=%d k_max=%d gamma=%.4f tau=%.2f epsilon=%.2f",
                        self.schedule.k_min, self.schedule.k_max, self.schedule.gamma,
                        est.tau, self.epsilon)
        self._pool = None

    def _map(self, fn, items):
        if self._pool is None:
            return [fn(item) for item in items]
        return list(self._pool.map(fn, items))

    def _k_for_epoch(self, epoch: int) -> int:
        est = self.cfg.estimator
        if est.kind is EstimatorKind.GUIDED:
            return self.schedule.k_at(epoch)
        if est.kind is EstimatorKind.SPSA:
            return est.k
        return 0

    def _ps(self, key, X, params, members):
        mode = self.cfg.mode

        def job(m):
            return param_shift_jacobian(self.circuit, X[m], params, self.observables, mode,
                                        _stream(self.cfg.seed, *key, m))
        return self._map(job, members)

    def _spsa(self, key, shared_key, X, params, members, k):
        cfg = SpsaConfig(k, self.spsa.c, self.spsa.share_directions)
        shared = None
        if cfg.share_directions:
            shared = draw_directions(_stream(self.cfg.seed, *shared_key), k, self.circuit.n_params)

        def job(m):
            return spsa_jacobian(self.circuit, X[m], params, self.observables, cfg, self.cfg.mode,
                                 _stream(self.cfg.seed, *key, m), directions=shared)
        return self._map(job, members)

    def batch_jacobians(self, epoch: int, batch: int, X: np.ndarray, params: np.ndarray,
                        tags: tuple[int, int] = (_GRADIENT, _DIRECTIONS)) -> tuple[np.ndarray, int]:
        """Per-sample Jacobians in batch order, shape (B, n_obs, n_params), and their evaluation cost"""
        est = self.cfg.estimator
        key, shared_key = (tags[0], epoch, batch), (tags[1], epoch, batch)
        members = list(range(X.shape[0]))
        if est.kind is EstimatorKind.PARAM_SHIFT:
            results = self._ps(key, X, params, members)
        elif est.kind is EstimatorKind.SPSA:
            results = self._spsa(key, shared_key, X, params, members, est.k)
        else:
            n_ps = ps_share(len(members), est.tau)
            ps_results = self._ps(key, X, params, members[:n_ps])
            spsa_results = []
            if n_ps < len(members):
                spsa_results = self._spsa(key, shared_key, X, params, members[n_ps:], self.schedule.k_at(epoch))
            if ps_results and spsa_results:
                sigma = avg_ps_norm([jac for jac, _ in ps_results])
                logger.debug("epoch %d batch %d: %d ps / %d spsa, sigma=%s",
                             epoch, batch, n_ps, len(spsa_results), np.array2string(sigma, precision=4))
                spsa_results = [(suppress(jac, sigma, self.epsilon), n) for jac, n in spsa_results]
            results = ps_results + spsa_results
        jacs = np.stack([jac for jac, _ in results])
        return jacs, sum(n for _, n in results)

    def gradient_snapshot(self, epoch: int, params: np.ndarray) -> tuple[np.ndarray, int]:
        """
        Jacobian entries of the configured estimator for every training sample at
        the parameters entering `epoch`, batched in dataset order. Draws come from
        their own streams, so a snapshot never changes the training run.
        """
        features, size = self.data.train.features, self.cfg.batch_size
        entries, cost = [], 0
        for batch, start in enumerate(range(0, len(self.data.train), size)):
            jacs, n = self.batch_jacobians(epoch, batch, features[start:start + size], params,
                                           tags=(_SNAPSHOT, _SNAPSHOT_DIRECTIONS))
            entries.append(jacs.reshape(-1))
            cost += n
        return np.concatenate(entries), cost

    def _evaluate(self, ds: Dataset, params: np.ndarray, rng, ideal: bool = False) -> tuple[np.ndarray, int]:
        mode = ExecutionMode.ideal() if ideal else self.cfg.mode
        return run_batch(self.circuit, ds.features, params[None, :], self.observables, mode, rng)

    def run(self) -> TrainReport:
        cfg = self.cfg
        train, n_train = self.data.train, len(self.data.train)
        params = initial_params(cfg, self.circuit.n_params)
        optimizer = make_optimizer(cfg.optimizer, cfg.learning_rate, self.circuit.n_params)
        report = TrainReport(config={}, initial_params=params.copy())
        grad_evals = forward_evals = val_evals = 0
        capture = set(cfg.histogram_epochs)

        if self.workers > 1:
            self._pool = ThreadPoolExecutor(max_workers=self.workers)
        try:
            for epoch in tqdm(range(cfg.epochs), desc="epochs", disable=None, leave=False):
                k_epoch = self._k_for_epoch(epoch)
                order = _stream(cfg.seed, _SHUFFLE, epoch).permutation(n_train)
                loss_sum = 0.0
                if epoch in capture:
                    entries, n_snap = self.gradient_snapshot(epoch, params)
                    report.histograms[epoch] = histogram_counts(entries)
                    report.histogram_evals += n_snap
                for batch, start in enumerate(range(0, n_train, cfg.batch_size)):
                    idx = order[start:start + cfg.batch_size]
                    X, Y = train.features[idx], train.targets[idx]

                    preds, n_fwd = run_batch(self.circuit, X, params[None, :], self.observables, cfg.mode,
                                             _stream(cfg.seed, _FORWARD, epoch, batch))
                    forward_evals += n_fwd
                    loss, errors = loss_and_error(cfg.task, preds, Y, cfg.classification_loss)
                    loss_sum += loss * len(idx)

                    jacs, n_grad = self.batch_jacobians(epoch, batch, X, params)
                    grad_evals += n_grad

                    grad = np.einsum("moi,mo->i", jacs, errors)
                    try:
                        params = optimizer.step(params, grad)
                    except NumericFaultError as exc:
                        raise NumericFaultError(f"epoch {epoch}, batch {batch}: {exc}") from exc
                    report.trajectory.append(params.copy())

                val_preds, n_val = self._evaluate(self.data.val, params, _stream(cfg.seed, _VALIDATION, epoch),
                                                  ideal=cfg.validate_ideal)
                val_evals += n_val
                record = EpochRecord(
                    epoch=epoch,
                    train_loss=loss_sum / n_train,
                    val_metric=metric(cfg.task, val_preds, self.data.val.targets),
                    grad_evals=grad_evals,
                    forward_evals=forward_evals,
                    val_evals=val_evals,
                    k_epoch=k_epoch,
                )
                report.records.append(record)
                logger.info("epoch %d: loss=%.6f val=%.6f k=%d grad_evals=%d",
                            epoch, record.train_loss, record.val_metric, k_epoch, grad_evals)
        finally:
            if self._pool is not None:
                self._pool.shutdown()
                self._pool = None

        if len(self.data.test):
            test_preds, n_test = self._evaluate(self.data.test, params, _stream(cfg.seed, _TEST),
                                                ideal=cfg.validate_ideal)
            report.test_evals = n_test
            report.test_predictions = test_preds
            report.test_targets = self.data.test.targets
            report.test_metric = metric(cfg.task, test_preds, self.data.test.targets)
            if cfg.task is Task.CLASSIFICATION:
                report.test_accuracy = accuracy(test_preds, self.data.test.targets)
        return report


def train_baseline(cfg: TrainConfig, data: TrainingData, circuit: ParamCircuit,
                   observables: Sequence[PauliZObservable], workers: int = 1) -> TrainReport:
    """Single-estimator training loop (parameter shift or SPSA for every sample)"""
    if cfg.estimator.kind is EstimatorKind.GUIDED:
        raise ConfigError("train_baseline takes a parameter-shift or SPSA estimator; use train_guided")
    return Trainer(cfg, data, circuit, observables, workers).run()


def train_guided(cfg: TrainConfig, data: TrainingData, circuit: ParamCircuit,
                 observables: Sequence[PauliZObservable], workers: int = 1) -> TrainReport:
    """Guided-SPSA training loop"""
    if cfg.estimator.kind is not EstimatorKind.GUIDED:
        raise ConfigError("train_guided needs a guided estimator")
    return Trainer(cfg, data, circuit, observables, workers).run()


def train(cfg: TrainConfig, data: TrainingData, circuit: ParamCircuit,
          observables: Sequence[PauliZObservable], workers: int = 1) -> TrainReport:
    if cfg.estimator.kind is EstimatorKind.GUIDED:
        return train_guided(cfg, data, circuit, observables, workers)
    return train_baseline(cfg, data, circuit, observables, workers)
