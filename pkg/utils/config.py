"""
Run configuration: JSON documents parsed into frozen dataclasses.

Unknown keys are rejected with their dotted path, every run echoes its resolved
config through `RunConfig.to_dict()`, and parsing that echo gives back an equal
RunConfig.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import types
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Union, get_args, get_origin, get_type_hints

from modules.circuit import AnsatzSpec, Encoding, ParamCircuit, build_boston, build_layered
from modules.errors import ConfigError
from modules.optimizers import OptimizerKind
from modules.simulator import ExecutionMode, ModeKind, NoiseModel, PauliZObservable
from modules.training import ClassificationLoss, EstimatorConfig, InitKind, TrainConfig, TrainingData
from utils.data_generator import gen_friedman
from utils.datasets import DEFAULT_RATIOS, FULL_TURN, Task, check_feature_range, load_csv, split, split_sizes

logger = logging.getLogger(__name__)


class DatasetSource(str, Enum):
    FRIEDMAN = "friedman"
    CSV = "csv"
    NONE = "none"


class AnsatzKind(str, Enum):
    LAYERED = "layered"
    BOSTON = "boston"


@dataclass(frozen=True)
class DatasetConfig:
    """
    Where the samples come from. A csv source may also declare its shape
    (`n_samples` rows, `n_features` feature columns): loading then checks the
    file against it, and `dataset_shape` can size a run without the file.
    Features are scaled onto `feature_range`, an angle interval inside [-pi, pi].
    """
    source: DatasetSource = DatasetSource.FRIEDMAN
    path: str | None = None
    target_column: str | None = None
    n_samples: int = 500
    n_features: int | None = None
    noise_std: float = 0.0
    seed: int = 0
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    feature_range: tuple[float, float] = FULL_TURN

    def __post_init__(self):
        if self.source is DatasetSource.CSV and (not self.path or not self.target_column):
            raise ConfigError("csv datasets need both 'path' and 'target_column'")
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.n_features is not None and self.n_features < 1:
            raise ConfigError(f"n_features must be >= 1, got {self.n_features}")
        object.__setattr__(self, "feature_range", check_feature_range(self.feature_range))


@dataclass(frozen=True)
class AnsatzConfig:
    kind: AnsatzKind = AnsatzKind.LAYERED
    n_qubits: int = 5
    n_layers: int = 5
    encoding: Encoding = Encoding.ANGLE_ONCE
    features_per_layer: int = 0
    entangle: bool = True


@dataclass(frozen=True)
class ModeConfig:
    kind: ModeKind = ModeKind.IDEAL
    shots: int | None = None
    p1: float = 0.0
    p2: float = 0.0
    p_readout: float = 0.0

    def to_mode(self) -> ExecutionMode:
        if self.kind is ModeKind.IDEAL:
            return ExecutionMode.ideal()
        if self.kind is ModeKind.SHOTS:
            return ExecutionMode.with_shots(self.shots or 0)
        return ExecutionMode.noisy(NoiseModel(self.p1, self.p2, self.p_readout), self.shots or 0)


@dataclass(frozen=True)
class TrainingSection:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.01
    optimizer: OptimizerKind = OptimizerKind.ADAM
    init: InitKind = InitKind.UNIFORM_ZERO_PI
    seed: int = 0
    init_seed: int | None = None
    classification_loss: ClassificationLoss = ClassificationLoss.BCE
    histogram_epochs: tuple[int, ...] = ()
    validate_ideal: bool = False


@dataclass(frozen=True)
class GradcheckConfig:
    draws: int = 20
    h: float = 1e-4
    tolerance: float = 1e-6
    spsa_samples: int = 2000
    c: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.draws < 1:
            raise ConfigError(f"draws must be >= 1, got {self.draws}")
        if self.spsa_samples < 1:
            raise ConfigError(f"spsa_samples must be >= 1, got {self.spsa_samples}")
        for name in ("h", "tolerance", "c"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")


@dataclass(frozen=True)
class RunConfig:
    name: str = "run"
    task: Task = Task.REGRESSION
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    ansatz: AnsatzConfig = field(default_factory=AnsatzConfig)
    observables: tuple[tuple[int, ...], ...] | None = None
    mode: ModeConfig = field(default_factory=ModeConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    training: TrainingSection = field(default_factory=TrainingSection)
    gradcheck: GradcheckConfig = field(default_factory=GradcheckConfig)
    output_dir: str = "runs/run"

    def train_config(self) -> TrainConfig:
        section = {f.name: getattr(self.training, f.name) for f in dataclasses.fields(self.training)}
        try:
            return TrainConfig(task=self.task, estimator=self.estimator, mode=self.mode.to_mode(), **section)
        except ConfigError as exc:
            raise ConfigError(f"training: {exc}") from exc

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None) -> "RunConfig":
        cfg = self
        if seed is not None:
            cfg = dataclasses.replace(cfg, training=dataclasses.replace(cfg.training, seed=seed))
        if output_dir is not None:
            cfg = dataclasses.replace(cfg, output_dir=str(output_dir))
        return cfg

    def to_dict(self) -> dict:
        return _dump(self)


# ---------------------------------------------------------------------------
# Generic dataclass <-> JSON mapping
# ---------------------------------------------------------------------------

def _dump(value):
    if dataclasses.is_dataclass(value):
        return {f.name: _dump(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (tuple, list)):
        return [_dump(v) for v in value]
    return value


def _coerce(tp, value, path: str):
    origin, args = get_origin(tp), get_args(tp)
    if origin in (Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if isinstance(tp, type) and issubclass(tp, Enum):
        try:
            return tp(value)
        except ValueError:
            raise ConfigError(f"{path}: {value!r} is not one of {[m.value for m in tp]}") from None
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if origin in (tuple, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
        if len(args) != len(value):
            raise ConfigError(f"{path}: expected {len(args)} entries, got {len(value)}")
        return tuple(_coerce(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    return value


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {data!r}")
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"unknown key(s): {', '.join(where + k for k in unknown)}")
    kwargs = {}
    for name in names & set(data):
        kwargs[name] = _coerce(hints[name], data[name], f"{path}.{name}" if path else name)
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def parse_config(data: dict) -> RunConfig:
    return _build(RunConfig, data, "")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    cfg = parse_config(data)
    logger.debug("loaded config %s from %s", cfg.name, path)
    return cfg


# ---------------------------------------------------------------------------
# Building the experiment objects a config describes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DataShape:
    n_train: int
    n_val: int
    n_test: int
    n_features: int


def load_training_data(cfg: RunConfig) -> TrainingData:
    ds_cfg = cfg.dataset
    if ds_cfg.source is DatasetSource.FRIEDMAN:
        raw = gen_friedman(ds_cfg.n_samples, ds_cfg.noise_std, ds_cfg.seed)
    elif ds_cfg.source is DatasetSource.CSV:
        raw = load_csv(ds_cfg.path, ds_cfg.target_column, cfg.task)
        if ds_cfg.n_features is not None and (len(raw), raw.n_features) != (ds_cfg.n_samples, ds_cfg.n_features):
            raise ConfigError(f"dataset: {ds_cfg.path} holds {len(raw)} rows x {raw.n_features} features, "
                              f"declared {ds_cfg.n_samples} x {ds_cfg.n_features}")
    else:
        raise ConfigError(f"dataset source {ds_cfg.source.value!r} carries no data to train on")
    train, val, test = split(raw, ds_cfg.ratios, ds_cfg.seed, ds_cfg.feature_range)
    return TrainingData(train, val, test)


def dataset_shape(cfg: RunConfig) -> DataShape:
    """Split sizes and feature count; a csv with a declared shape need not exist yet"""
    ds_cfg = cfg.dataset
    if (ds_cfg.source is DatasetSource.CSV and ds_cfg.n_features is not None
            and not Path(ds_cfg.path).exists()):
        logger.warning("%s not found, sizing from the declared %d x %d shape",
                       ds_cfg.path, ds_cfg.n_samples, ds_cfg.n_features)
        return DataShape(*split_sizes(ds_cfg.n_samples, ds_cfg.ratios), ds_cfg.n_features)
    data = load_training_data(cfg)
    return DataShape(len(data.train), len(data.val), len(data.test), data.train.n_features)


def build_circuit(cfg: RunConfig, n_inputs: int) -> ParamCircuit:
    a = cfg.ansatz
    if a.kind is AnsatzKind.BOSTON:
        return build_boston(a.n_qubits, n_inputs, a.n_layers)
    return build_layered(AnsatzSpec(
        n_qubits=a.n_qubits,
        n_layers=a.n_layers,
        encoding=a.encoding,
        n_inputs=n_inputs,
        features_per_layer=a.features_per_layer,
        entangle=a.entangle,
    ))


def build_observables(cfg: RunConfig, circuit: ParamCircuit) -> list[PauliZObservable]:
    if cfg.observables is None:
        return [PauliZObservable.full(circuit.n_qubits)]
    observables = [PauliZObservable(frozenset(q)) for q in cfg.observables]
    for obs in observables:
        if not obs.qubits or max(obs.qubits) >= circuit.n_qubits:
            raise ConfigError(f"observables: {sorted(obs.qubits)} is not a Z string on {circuit.n_qubits} qubits")
    return observables
