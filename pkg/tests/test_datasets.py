import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modules.errors import ConfigError, DegenerateFeatureError, IngestionError
from utils.data_generator import friedman_target, gen_friedman
from utils.datasets import (
    Dataset,
    Task,
    apply_normalization,
    denormalize_targets,
    fit_normalization,
    load_csv,
    normalize,
    split,
    split_sizes,
)

IRIS = Path(__file__).resolve().parents[1] / "data" / "iris.csv"


# --- Friedman generator ---

def test_friedman_reference_point():
    assert friedman_target(np.full((1, 5), 0.5))[0] == pytest.approx(10 * math.sin(math.pi / 4) + 7.5)


def test_friedman_seeded():
    a, b = gen_friedman(20, seed=4), gen_friedman(20, seed=4)
    np.testing.assert_array_equal(a.features, b.features)
    assert a.features.shape == (20, 5)
    assert np.all((a.features >= 0) & (a.features <= 1))


def test_friedman_noise_changes_targets():
    clean, noisy = gen_friedman(50, seed=1), gen_friedman(50, noise_std=1.0, seed=1)
    np.testing.assert_array_equal(clean.features, noisy.features)
    assert not np.allclose(clean.targets, noisy.targets)


def test_friedman_needs_samples():
    with pytest.raises(ConfigError):
        gen_friedman(0)


# --- CSV ingestion ---

def test_iris_file():
    ds = load_csv(IRIS, "species", Task.CLASSIFICATION)
    assert ds.features.shape == (150, 4)
    assert ds.targets.shape == (150, 3)
    assert ds.target_names == ("setosa", "versicolor", "virginica")
    np.testing.assert_array_equal(ds.targets.sum(axis=1), np.ones(150))


def test_missing_file(tmp_path):
    with pytest.raises(IngestionError):
        load_csv(tmp_path / "nope.csv", "y")


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(IngestionError):
        load_csv(path, "y")


def test_header_only(tmp_path):
    path = tmp_path / "header.csv"
    path.write_text("a,b,y\n")
    with pytest.raises(IngestionError):
        load_csv(path, "y")


def test_missing_target_column(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(IngestionError):
        load_csv(path, "y")


def test_non_numeric_cell_reports_row(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b,y\n1,2,3\n4,oops,6\n")
    with pytest.raises(IngestionError) as err:
        load_csv(path, "y")
    assert err.value.row == 1
    assert "row 1" in str(err.value)


def test_regression_csv(tmp_path):
    path = tmp_path / "data.csv"
    pd.DataFrame({"a": [1.0, 2.0], "y": [0.5, 0.7]}).to_csv(path, index=False)
    ds = load_csv(path, "y")
    assert ds.feature_names == ("a",)
    np.testing.assert_allclose(ds.targets[:, 0], [0.5, 0.7])


# --- Normalization ---

def test_normalization_reference_column():
    ds = Dataset(features=np.array([[0.0], [5.0], [10.0]]), targets=np.zeros(3), task=Task.CLASSIFICATION)
    np.testing.assert_allclose(normalize(ds).features[:, 0], [-math.pi, 0.0, math.pi], atol=1e-12)


def test_normalization_idempotent_on_extremes():
    col = np.array([[-math.pi], [0.3], [math.pi]])
    ds = Dataset(features=col, targets=np.zeros(3), task=Task.CLASSIFICATION)
    np.testing.assert_allclose(normalize(ds).features, col, atol=1e-12)


def test_normalization_onto_a_narrower_range():
    ds = Dataset(features=np.array([[0.0], [5.0], [10.0]]), targets=np.zeros(3), task=Task.CLASSIFICATION)
    half = (-math.pi / 2, math.pi / 2)
    scaled = normalize(ds, half)
    np.testing.assert_allclose(scaled.features[:, 0], [-math.pi / 2, 0.0, math.pi / 2], atol=1e-12)
    assert scaled.normalization.feature_range == half


def test_split_applies_the_training_range_to_every_slice():
    train, val, test = split(gen_friedman(60, seed=4), (0.5, 0.25, 0.25), seed=4, feature_range=(-1.0, 1.0))
    np.testing.assert_allclose(train.features.min(axis=0), -1.0, atol=1e-12)
    np.testing.assert_allclose(train.features.max(axis=0), 1.0, atol=1e-12)
    assert val.normalization is train.normalization is test.normalization


@pytest.mark.parametrize("feature_range", [(-4.0, 0.0), (0.0, 0.0), (1.0, -1.0)])
def test_feature_range_outside_one_turn_rejected(feature_range):
    ds = Dataset(features=np.array([[0.0], [1.0]]), targets=np.zeros(2), task=Task.CLASSIFICATION)
    with pytest.raises(ConfigError, match="feature_range"):
        fit_normalization(ds, feature_range)


def test_constant_column_rejected():
    ds = Dataset(features=np.array([[1.0, 2.0], [1.0, 3.0]]), targets=np.array([0.0, 1.0]))
    with pytest.raises(DegenerateFeatureError):
        fit_normalization(ds)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.lists(st.tuples(finite, finite), min_size=2, max_size=40))
def test_normalization_range_and_target_round_trip(rows):
    data = np.array(rows)
    if np.ptp(data[:, 0]) < 1e-3 or np.ptp(data[:, 1]) < 1e-3:
        return
    ds = Dataset(features=data[:, :1], targets=data[:, 1])
    norm = fit_normalization(ds)
    scaled = apply_normalization(ds, norm)
    assert scaled.features.min() == pytest.approx(-math.pi, abs=1e-9)
    assert scaled.features.max() == pytest.approx(math.pi, abs=1e-9)
    assert np.all(np.abs(scaled.targets) <= 1.0 + 1e-9)
    np.testing.assert_allclose(denormalize_targets(scaled.targets, norm), ds.targets, rtol=1e-9, atol=1e-6)


# --- Splits ---

def test_split_sizes_reference():
    assert split_sizes(500) == (340, 110, 50)
    assert split_sizes(506) == (344, 111, 51)
    assert split_sizes(150) == (102, 33, 15)


@pytest.mark.parametrize("ratios", [(0.5, 0.5), (0.6, 0.6, -0.2), (0.5, 0.3, 0.3)])
def test_split_ratio_validation(ratios):
    with pytest.raises(ConfigError):
        split_sizes(100, ratios)


def test_split_too_small():
    with pytest.raises(ConfigError):
        split(gen_friedman(3), seed=0)


@given(st.integers(10, 300), st.integers(0, 1000))
def test_split_is_a_partition(n, seed):
    ds = Dataset(features=np.arange(n, dtype=float)[:, None] * np.ones((1, 2)) + np.array([0.0, 1.0]),
                 targets=np.arange(n, dtype=float))
    train, val, test = split(ds, (0.68, 0.22, 0.10), seed)
    assert (len(train), len(val), len(test)) == split_sizes(n)
    # Targets are scaled with the train range; undo it to recover identities
    ids = np.concatenate([denormalize_targets(part.targets[:, 0], train.normalization)
                          for part in (train, val, test)])
    np.testing.assert_allclose(np.sort(ids), np.arange(n), atol=1e-8)


def test_split_normalizes_on_train_only():
    train, val, test = split(gen_friedman(200, seed=2), seed=2)
    assert train.features.min() == pytest.approx(-math.pi)
    assert train.features.max() == pytest.approx(math.pi)
    assert val.normalization is train.normalization is test.normalization
