"""
Synthetic regression data: the Friedman #1 benchmark
"""
import numpy as np

from modules.errors import ConfigError
from utils.datasets import Dataset, Task

FRIEDMAN_FEATURES = ("x1", "x2", "x3", "x4", "x5")


def friedman_target(features):
    """y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5"""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    return (
        10.0 * np.sin(np.pi * x[:, 0] * x[:, 1])
        + 20.0 * (x[:, 2] - 0.5) ** 2
        + 10.0 * x[:, 3]
        + 5.0 * x[:, 4]
    )


def gen_friedman(n: int = 500, noise_std: float = 0.0, seed: int = 0) -> Dataset:
    """Sample n points with features uniform on [0, 1]"""
    if n < 1:
        raise ConfigError(f"need at least one sample, got n={n}")
    rng = np.random.default_rng(seed)
    features = rng.uniform(0.0, 1.0, size=(n, len(FRIEDMAN_FEATURES)))
    targets = friedman_target(features)
    if noise_std > 0:
        targets = targets + rng.normal(0.0, noise_std, size=n)
    return Dataset(
        features=features,
        targets=targets,
        task=Task.REGRESSION,
        feature_names=FRIEDMAN_FEATURES,
        target_names=("y",),
    )

