"""
Statevector simulator for small parameterized circuits.

Basis ordering is little-endian: qubit q is bit q of the basis index. States are
kept as numpy arrays of shape (rows, 2, ..., 2) while gates are applied so many
bound circuits evolve in one pass; axis 1 + (n - 1 - q) carries qubit q.

Noisy execution is trajectory based: every shot is its own pure-state run with
Pauli errors drawn after each gate, followed by a single measurement sample.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from modules.circuit import ParamCircuit
from modules.errors import BindingError, CapacityError, ConfigError
from modules.gates import GateKind, GateOp

logger = logging.getLogger(__name__)

MAX_QUBITS = 20

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([_I, _X, _Y, _Z])


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2 ** self.n_qubits:
            raise CapacityError(f"{amps.size} amplitudes do not describe {self.n_qubits} qubits")
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class PauliZObservable:
    """Tensor product of Z on `qubits` and identity elsewhere"""
    qubits: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "qubits", frozenset(int(q) for q in self.qubits))

    @classmethod
    def on(cls, *qubits: int) -> "PauliZObservable":
        return cls(frozenset(qubits))

    @classmethod
    def full(cls, n_qubits: int) -> "PauliZObservable":
        return cls(frozenset(range(n_qubits)))

    @property
    def mask(self) -> int:
        return sum(1 << q for q in self.qubits)

    def label(self, n_qubits: int) -> str:
        return "".join("Z" if q in self.qubits else "I" for q in range(n_qubits))


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate errors plus classical readout flips"""
    p1: float = 0.0
    p2: float = 0.0
    p_readout: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "p_readout"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ConfigError(f"noise probability {name}={value} outside [0, 1)")


class ModeKind(str, Enum):
    IDEAL = "ideal"
    SHOTS = "shots"
    NOISY = "noisy"


@dataclass(frozen=True)
class ExecutionMode:
    kind: ModeKind = ModeKind.IDEAL
    shots: int | None = None
    noise: NoiseModel | None = None

    def __post_init__(self):
        if self.kind is ModeKind.IDEAL:
            return
        if self.shots is None or self.shots < 1:
            raise ConfigError(f"{self.kind.value} mode needs shots >= 1, got {self.shots}")
        if self.kind is ModeKind.NOISY and self.noise is None:
            raise ConfigError("noisy mode needs a noise model")

    @classmethod
    def ideal(cls) -> "ExecutionMode":
        return cls(ModeKind.IDEAL)

    @classmethod
    def with_shots(cls, shots: int) -> "ExecutionMode":
        return cls(ModeKind.SHOTS, shots)

    @classmethod
    def noisy(cls, model: NoiseModel, shots: int) -> "ExecutionMode":
        return cls(ModeKind.NOISY, shots, model)

    @property
    def is_ideal(self) -> bool:
        return self.kind is ModeKind.IDEAL


def init_state(n_qubits: int) -> StateVector:
    """|0...0> on n_qubits"""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must lie in 1..{MAX_QUBITS}, got {n_qubits}")
    amps = np.zeros(2 ** n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def rotation_matrices(kind: GateKind, angles: np.ndarray) -> np.ndarray:
    """exp(-i phi P / 2) for each angle, shape (rows, 2, 2)"""
    half = np.asarray(angles, dtype=float) / 2.0
    c, s = np.cos(half), np.sin(half)
    mats = np.zeros(half.shape + (2, 2), dtype=complex)
    if kind is GateKind.RX:
        mats[..., 0, 0] = c
        mats[..., 1, 1] = c
        mats[..., 0, 1] = -1j * s
        mats[..., 1, 0] = -1j * s
    elif kind is GateKind.RY:
        mats[..., 0, 0] = c
        mats[..., 1, 1] = c
        mats[..., 0, 1] = -s
        mats[..., 1, 0] = s
    elif kind is GateKind.RZ:
        mats[..., 0, 0] = np.exp(-1j * half)
        mats[..., 1, 1] = np.exp(1j * half)
    else:
        raise BindingError(f"{kind.name} is not a rotation")
    return mats


def _axis(qubit: int, n: int) -> int:
    return 1 + (n - 1 - qubit)


def _apply_1q(psi: np.ndarray, mats: np.ndarray, qubit: int, n: int) -> np.ndarray:
    # psi: (rows, 2, ..., 2); mats: (rows, 2, 2)
    moved = np.moveaxis(psi, _axis(qubit, n), -1)
    out = np.einsum("r...j,rij->r...i", moved, mats)
    return np.moveaxis(out, -1, _axis(qubit, n))


def _apply_cnot(psi: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    out = psi.copy()
    ctrl = [slice(None)] * (n + 1)
    ctrl[_axis(control, n)] = 1
    ctrl = tuple(ctrl)
    # Within the control=1 slab, flip the target axis
    t_axis = _axis(target, n) - (1 if _axis(target, n) > _axis(control, n) else 0)
    out[ctrl] = np.flip(psi[ctrl], axis=t_axis)
    return out


def _random_paulis(rng: np.random.Generator, rows: int, p: float, choices: int) -> np.ndarray:
    """Index 0 (identity) with probability 1-p, otherwise uniform over 1..choices-1"""
    hit = rng.random(rows) < p
    picks = rng.integers(1, choices, size=rows)
    return np.where(hit, picks, 0)


def evolve(n_qubits: int, ops: Sequence[GateOp], angles: np.ndarray,
           noise: NoiseModel | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Run every row of `angles` through the gate list starting from |0...0>; returns (rows, 2**n)"""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must lie in 1..{MAX_QUBITS}, got {n_qubits}")
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    rows = angles.shape[0]
    psi = np.zeros((rows,) + (2,) * n_qubits, dtype=complex)
    psi[(slice(None),) + (0,) * n_qubits] = 1.0

    gate_noise = noise is not None and (noise.p1 > 0 or noise.p2 > 0)
    if gate_noise and rng is None:
        raise ConfigError("noisy evolution needs a random stream")

    for j, op in enumerate(ops):
        if op.kind is GateKind.CNOT:
            control, target = op.qubits
            psi = _apply_cnot(psi, control, target, n_qubits)
            if gate_noise and noise.p2 > 0:
                idx = _random_paulis(rng, rows, noise.p2, 16)
                psi = _apply_1q(psi, PAULIS[idx // 4], control, n_qubits)
                psi = _apply_1q(psi, PAULIS[idx % 4], target, n_qubits)
        else:
            (qubit,) = op.qubits
            psi = _apply_1q(psi, rotation_matrices(op.kind, angles[:, j]), qubit, n_qubits)
            if gate_noise and noise.p1 > 0:
                idx = _random_paulis(rng, rows, noise.p1, 4)
                psi = _apply_1q(psi, PAULIS[idx], qubit, n_qubits)
    return psi.reshape(rows, -1)


def apply_gate(state: StateVector, gate: GateOp, bound_angle: float | None = None) -> StateVector:
    """Apply one gate with its angle already resolved"""
    n = state.n_qubits
    if any(q >= n for q in gate.qubits):
        raise BindingError(f"{gate.kind.name} on {gate.qubits} outside a {n}-qubit register")
    psi = state.amplitudes.reshape((1,) + (2,) * n)
    if gate.kind is GateKind.CNOT:
        psi = _apply_cnot(psi, gate.qubits[0], gate.qubits[1], n)
    else:
        if bound_angle is None:
            raise BindingError(f"{gate.kind.name} on qubit {gate.qubits[0]} applied without an angle")
        psi = _apply_1q(psi, rotation_matrices(gate.kind, np.array([bound_angle])), gate.qubits[0], n)
    return StateVector(n, psi.reshape(-1))


def parity_table(n_qubits: int, observables: Sequence[PauliZObservable]) -> np.ndarray:
    """(-1)^popcount(b & mask) for every basis index b and observable, shape (2**n, n_obs)"""
    for obs in observables:
        if any(q >= n_qubits or q < 0 for q in obs.qubits):
            raise BindingError(f"observable {sorted(obs.qubits)} outside a {n_qubits}-qubit register")
    basis = np.arange(2 ** n_qubits, dtype=np.uint64)
    masks = np.array([obs.mask for obs in observables], dtype=np.uint64)
    odd = np.bitwise_count(basis[:, None] & masks[None, :]) & 1
    return 1.0 - 2.0 * odd.astype(float)


def expectation(state: StateVector, obs: PauliZObservable) -> float:
    """Exact <psi|Z_mask|psi>"""
    signs = parity_table(state.n_qubits, [obs])[:, 0]
    return float(state.probabilities() @ signs)


def _flip_readout(outcomes: np.ndarray, n_qubits: int, p_readout: float,
                  rng: np.random.Generator) -> np.ndarray:
    if p_readout <= 0:
        return outcomes
    flips = rng.random((outcomes.size, n_qubits)) < p_readout
    weights = (1 << np.arange(n_qubits)).astype(np.int64)
    return outcomes ^ (flips.astype(np.int64) @ weights)


def sample_expectation(state: StateVector, obs: PauliZObservable, shots: int,
                       rng: np.random.Generator, noise: NoiseModel | None = None) -> float:
    """Mean parity over `shots` basis samples, with readout flips when a noise model is given"""
    if shots < 1:
        raise ConfigError(f"shots must be >= 1, got {shots}")
    probs = state.probabilities()
    outcomes = rng.choice(probs.size, size=shots, p=probs / probs.sum())
    if noise is not None:
        outcomes = _flip_readout(outcomes, state.n_qubits, noise.p_readout, rng)
    signs = parity_table(state.n_qubits, [obs])[:, 0]
    return float(signs[outcomes].mean())


def _sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One basis index per row by inverse-CDF sampling"""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cdf[:, -1]
    return np.minimum((cdf < u[:, None]).sum(axis=1), probs.shape[1] - 1)


def run_angles(circuit: ParamCircuit, angles: np.ndarray, observables: Sequence[PauliZObservable],
               mode: ExecutionMode, rng: np.random.Generator | None = None) -> tuple[np.ndarray, int]:
    """Evaluate one circuit per row of resolved gate angles; returns (rows, n_obs) and the evaluation count"""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    if angles.shape[1] != len(circuit.ops):
        raise BindingError(f"{angles.shape[1]} angles for {len(circuit.ops)} gates")
    rows, n = angles.shape[0], circuit.n_qubits
    signs = parity_table(n, observables)

    if mode.kind is ModeKind.IDEAL:
        probs = np.abs(evolve(n, circuit.ops, angles)) ** 2
        return probs @ signs, rows

    if rng is None:
        raise ConfigError(f"{mode.kind.value} mode needs a random stream")

    if mode.kind is ModeKind.SHOTS:
        probs = np.abs(evolve(n, circuit.ops, angles)) ** 2
        probs /= probs.sum(axis=1, keepdims=True)
        counts = rng.multinomial(mode.shots, probs)
        return counts @ signs / mode.shots, rows

    # Noisy: each shot is an independent trajectory
    repeated = np.repeat(angles, mode.shots, axis=0)
    states = evolve(n, circuit.ops, repeated, noise=mode.noise, rng=rng)
    outcomes = _sample_rows(np.abs(states) ** 2, rng)
    outcomes = _flip_readout(outcomes, n, mode.noise.p_readout, rng)
    values = signs[outcomes].reshape(rows, mode.shots, len(observables)).mean(axis=1)
    return values, rows


def run_batch(circuit: ParamCircuit, inputs, params, observables: Sequence[PauliZObservable],
              mode: ExecutionMode, rng: np.random.Generator | None = None) -> tuple[np.ndarray, int]:
    """Evaluate the circuit for every (inputs row, params row) pair"""
    return run_angles(circuit, circuit.angle_table(inputs, params), observables, mode, rng)


def run_circuit(circuit: ParamCircuit, inputs, params, observables: Sequence[PauliZObservable],
                mode: ExecutionMode, rng: np.random.Generator | None = None) -> tuple[np.ndarray, int]:
    """One circuit evaluation: an expectation per observable and an evaluation count of 1"""
    inputs = np.asarray(inputs, dtype=float).reshape(-1)
    params = np.asarray(params, dtype=float).reshape(-1)
    if inputs.size != circuit.n_inputs or params.size != circuit.n_params:
        raise BindingError(
            f"expected {circuit.n_inputs} inputs / {circuit.n_params} params, "
            f"got {inputs.size} / {params.size}"
        )
    values, count = run_batch(circuit, inputs[None, :], params[None, :], observables, mode, rng)
    return values[0], count


def statevector(circuit: ParamCircuit, inputs, params) -> StateVector:
    """Exact final state of a single bound circuit"""
    angles = circuit.angle_table(np.asarray(inputs, dtype=float).reshape(1, -1),
                                 np.asarray(params, dtype=float).reshape(1, -1))
    return StateVector(circuit.n_qubits, evolve(circuit.n_qubits, circuit.ops, angles)[0])
