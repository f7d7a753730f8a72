"""
Gradient estimators for circuit outputs.

A Jacobian here is a numpy array of shape (n_observables, n_params) holding
d f_o / d theta_i. Every estimator also returns the number of circuit
evaluations it spent.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from modules.circuit import ParamCircuit
from modules.errors import ConfigError, DegeneratePartitionError
from modules.simulator import ExecutionMode, PauliZObservable, run_angles, run_batch

logger = logging.getLogger(__name__)

SHIFT = math.pi / 2
SHIFT_COEFF = 0.5


@dataclass(frozen=True)
class SpsaConfig:
    k: int = 1
    c: float = 0.05
    share_directions: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"SPSA needs k >= 1, got {self.k}")
        if not self.c > 0:
            raise ConfigError(f"SPSA perturbation c must be positive, got {self.c}")


@dataclass(frozen=True)
class GuidedSpsaState:
    """Perturbation-sample schedule: k grows linearly from k_min towards k_max over the epochs"""
    tau: float
    epsilon: float
    k_min: int
    k_max: int
    gamma: float
    n_epochs: int

    def k_at(self, epoch: int) -> int:
        # Integer form of floor(k_min + epoch * gamma)
        return self.k_min + (epoch * (self.k_max - self.k_min)) // self.n_epochs


def make_schedule(n_params: int, tau: float, n_epochs: int, epsilon: float = 1.0) -> GuidedSpsaState:
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau must lie in [0, 1], got {tau}")
    if not 0.0 < epsilon <= 1.0:
        raise ConfigError(f"epsilon must lie in (0, 1], got {epsilon}")
    if n_epochs < 1:
        raise ConfigError(f"n_epochs must be >= 1, got {n_epochs}")
    if n_params < 1:
        raise ConfigError(f"n_params must be >= 1, got {n_params}")
    k_min = max(1, math.floor(n_params * 0.1))
    # Tiny circuits at tau near 1 would otherwise get k_max < k_min
    k_max = max(k_min, math.floor(n_params * min(1.0, 1.5 - tau)))
    return GuidedSpsaState(
        tau=tau,
        epsilon=epsilon,
        k_min=k_min,
        k_max=k_max,
        gamma=(k_max - k_min) / n_epochs,
        n_epochs=n_epochs,
    )


def param_shift_jacobian(circuit: ParamCircuit, inputs, params, observables: Sequence[PauliZObservable],
                         mode: ExecutionMode, rng: np.random.Generator | None = None) -> tuple[np.ndarray, int]:
    """
    Exact derivatives by shifting each trainable gate by +-pi/2.

    A parameter used by several gates gets the sum of its per-gate shift
    terms, i.e. the total derivative.
    """
    base = circuit.angle_table(np.asarray(inputs, dtype=float).reshape(1, -1),
                               np.asarray(params, dtype=float).reshape(1, -1))[0]
    cols, idx = circuit.param_columns
    n_occ = cols.size
    jac = np.zeros((len(observables), circuit.n_params))
    if n_occ == 0:
        return jac, 0

    shifted = np.tile(base, (2 * n_occ, 1))
    rows = np.arange(n_occ)
    shifted[rows, cols] += SHIFT
    shifted[n_occ + rows, cols] -= SHIFT
    values, count = run_angles(circuit, shifted, observables, mode, rng)
    terms = SHIFT_COEFF * (values[:n_occ] - values[n_occ:])
    np.add.at(jac.T, idx, terms)
    return jac, count


def draw_directions(rng: np.random.Generator, k: int, n_params: int) -> np.ndarray:
    """k Rademacher directions in {-1, +1}^n_params"""
    return rng.integers(0, 2, size=(k, n_params)) * 2.0 - 1.0


def spsa_jacobian(circuit: ParamCircuit, inputs, params, observables: Sequence[PauliZObservable],
                  cfg: SpsaConfig, mode: ExecutionMode, rng: np.random.Generator | None = None,
                  directions: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Average of k simultaneous-perturbation estimates of the output Jacobian"""
    params = np.asarray(params, dtype=float).reshape(-1)
    if directions is None:
        if rng is None:
            raise ConfigError("SPSA needs a random stream to draw directions")
        directions = draw_directions(rng, cfg.k, params.size)
    k = directions.shape[0]
    points = np.concatenate([params + cfg.c * directions, params - cfg.c * directions])
    values, count = run_batch(circuit, np.asarray(inputs, dtype=float).reshape(1, -1), points,
                              observables, mode, rng)
    diff = values[:k] - values[k:]
    # 1 / delta_i == delta_i for Rademacher entries
    jac = np.einsum("so,si->oi", diff, directions) / (2.0 * cfg.c * k)
    return jac, count


def avg_ps_norm(ps_jacobians: Sequence[np.ndarray]) -> np.ndarray:
    """Mean L2 norm of each observable row over the parameter-shift Jacobians"""
    if len(ps_jacobians) == 0:
        raise DegeneratePartitionError("no parameter-shift Jacobians to average")
    stacked = np.stack([np.asarray(j, dtype=float) for j in ps_jacobians])
    return np.linalg.norm(stacked, axis=2).mean(axis=0)


def suppress(spsa_jac: np.ndarray, sigma: np.ndarray, epsilon: float) -> np.ndarray:
    """Rescale every nonzero row r to norm epsilon * sigma_o; zero rows pass through"""
    if not 0.0 < epsilon <= 1.0:
        raise ConfigError(f"epsilon must lie in (0, 1], got {epsilon}")
    jac = np.asarray(spsa_jac, dtype=float)
    norms = np.linalg.norm(jac, axis=1)
    scale = np.ones_like(norms)
    nonzero = norms > 0
    scale[nonzero] = np.asarray(sigma, dtype=float)[nonzero] * epsilon / norms[nonzero]
    return jac * scale[:, None]


def finite_diff_jacobian(circuit: ParamCircuit, inputs, params, observables: Sequence[PauliZObservable],
                         h: float = 1e-4) -> np.ndarray:
    """Central differences on the ideal simulator"""
    if not h > 0:
        raise ConfigError(f"finite-difference step must be positive, got {h}")
    params = np.asarray(params, dtype=float).reshape(-1)
    eye = np.eye(params.size)
    points = np.concatenate([params + h * eye, params - h * eye])
    values, _ = run_batch(circuit, np.asarray(inputs, dtype=float).reshape(1, -1), points,
                          observables, ExecutionMode.ideal())
    return ((values[:params.size] - values[params.size:]) / (2.0 * h)).T


def relative_frobenius_error(estimate: np.ndarray, reference: np.ndarray) -> float:
    return float(np.linalg.norm(estimate - reference) / np.linalg.norm(reference))
