"""
Dataset container, CSV ingestion, [-pi, pi] normalization and train/validation/test splits
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from modules.errors import ConfigError, DegenerateFeatureError, IngestionError

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.68, 0.22, 0.10)
FULL_TURN = (-math.pi, math.pi)


class Task(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"
    TOY = "toy"


@dataclass(frozen=True)
class Normalization:
    """Per-feature min/max and regression target range fitted on the training slice"""
    feature_min: np.ndarray
    feature_max: np.ndarray
    target_min: float | None = None
    target_max: float | None = None
    feature_range: tuple[float, float] = FULL_TURN


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    task: Task = Task.REGRESSION
    feature_names: tuple[str, ...] = ()
    target_names: tuple[str, ...] = ()
    normalization: Normalization | None = field(default=None, repr=False)

    def __post_init__(self):
        features = np.atleast_2d(np.asarray(self.features, dtype=float))
        targets = np.asarray(self.targets, dtype=float)
        if targets.ndim == 1:
            targets = targets[:, None]
        if features.shape[0] != targets.shape[0]:
            raise IngestionError(f"{features.shape[0]} feature rows but {targets.shape[0]} target rows")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "Dataset":
        return replace(self, features=self.features[index], targets=self.targets[index])


def load_csv(path, target_column: str, task: Task | str = Task.REGRESSION) -> Dataset:
    """Read a headed CSV; the target column becomes targets (one-hot for classification)"""
    task = Task(task)
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"dataset file not found: {path}")
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError as exc:
        raise IngestionError(f"{path} is empty") from exc

    if df.empty:
        raise IngestionError(f"{path} has a header but no rows")
    if target_column not in df.columns:
        raise IngestionError(f"{path} has no column {target_column!r}; columns are {list(df.columns)}")

    feature_frame = df.drop(columns=[target_column])
    numeric = feature_frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna()
    if bad.any().any():
        row = int(np.flatnonzero(bad.any(axis=1).to_numpy())[0])
        column = bad.columns[bad.iloc[row].to_numpy()][0]
        raise IngestionError(f"non-numeric or missing value in column {column!r}", row=row)

    if task is Task.CLASSIFICATION:
        labels = df[target_column]
        if labels.isna().any():
            raise IngestionError("missing class label", row=int(np.flatnonzero(labels.isna().to_numpy())[0]))
        classes = sorted(labels.astype(str).unique())
        onehot = pd.get_dummies(labels.astype(str)).reindex(columns=classes, fill_value=False)
        targets = onehot.to_numpy(dtype=float)
        target_names = tuple(classes)
    else:
        values = pd.to_numeric(df[target_column], errors="coerce")
        if values.isna().any():
            raise IngestionError(f"non-numeric target in column {target_column!r}",
                                 row=int(np.flatnonzero(values.isna().to_numpy())[0]))
        targets = values.to_numpy(dtype=float)[:, None]
        target_names = (target_column,)

    logger.info("loaded %s: %d rows, %d features", path.name, len(df), feature_frame.shape[1])
    return Dataset(
        features=numeric.to_numpy(dtype=float),
        targets=targets,
        task=task,
        feature_names=tuple(feature_frame.columns),
        target_names=target_names,
    )


def check_feature_range(feature_range) -> tuple[float, float]:
    """Encoding angles must stay inside [-pi, pi]"""
    values = tuple(float(v) for v in feature_range)
    if len(values) != 2 or not -math.pi <= values[0] < values[1] <= math.pi:
        raise ConfigError(f"feature_range must be [lo, hi] with -pi <= lo < hi <= pi, got {values}")
    return values


def fit_normalization(ds: Dataset, feature_range=FULL_TURN) -> Normalization:
    feature_range = check_feature_range(feature_range)
    lo = ds.features.min(axis=0)
    hi = ds.features.max(axis=0)
    constant = np.flatnonzero(hi <= lo)
    if constant.size:
        names = [ds.feature_names[i] if ds.feature_names else str(i) for i in constant]
        raise DegenerateFeatureError(f"constant feature column(s) {names} cannot be scaled")
    if ds.task is Task.REGRESSION:
        t_lo, t_hi = float(ds.targets.min()), float(ds.targets.max())
        if t_hi <= t_lo:
            raise DegenerateFeatureError("regression target is constant")
        return Normalization(lo, hi, t_lo, t_hi, feature_range)
    return Normalization(lo, hi, feature_range=feature_range)


def apply_normalization(ds: Dataset, norm: Normalization) -> Dataset:
    """Features to the record's angle range and regression targets to [-1, 1]"""
    lo, hi = norm.feature_range
    span = norm.feature_max - norm.feature_min
    features = lo + (hi - lo) * (ds.features - norm.feature_min) / span
    targets = ds.targets
    if norm.target_min is not None:
        targets = -1.0 + 2.0 * (ds.targets - norm.target_min) / (norm.target_max - norm.target_min)
    return replace(ds, features=features, targets=targets, normalization=norm)


def normalize(ds: Dataset, feature_range=FULL_TURN) -> Dataset:
    return apply_normalization(ds, fit_normalization(ds, feature_range))


def denormalize_targets(values, norm: Normalization) -> np.ndarray:
    """Map scaled regression outputs back to the original target units"""
    values = np.asarray(values, dtype=float)
    if norm.target_min is None:
        return values
    return norm.target_min + (values + 1.0) * (norm.target_max - norm.target_min) / 2.0


def split_sizes(n: int, ratios=DEFAULT_RATIOS) -> tuple[int, int, int]:
    """Floor the train and validation shares, test takes the remainder"""
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ConfigError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    n_train = math.floor(ratios[0] * n + 1e-9)
    n_val = math.floor(ratios[1] * n + 1e-9)
    return n_train, n_val, n - n_train - n_val


def split(ds: Dataset, ratios=DEFAULT_RATIOS, seed: int = 0,
          feature_range=FULL_TURN) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded shuffle, contiguous slices, normalization fitted on the training slice only"""
    n_train, n_val, n_test = split_sizes(len(ds), ratios)
    if min(n_train, n_val, n_test) < 1:
        raise ConfigError(f"split of {len(ds)} samples by {tuple(ratios)} leaves an empty slice "
                          f"({n_train}/{n_val}/{n_test})")
    order = np.random.default_rng(seed).permutation(len(ds))
    train = ds.subset(order[:n_train])
    val = ds.subset(order[n_train:n_train + n_val])
    test = ds.subset(order[n_train + n_val:])

    norm = fit_normalization(train, feature_range)
    logger.debug("split %d samples into %d/%d/%d", len(ds), n_train, n_val, n_test)
    return (apply_normalization(train, norm),
            apply_normalization(val, norm),
            apply_normalization(test, norm))
