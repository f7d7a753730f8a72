"""
Parameterized circuits U(x, theta) and the layered ansatz builders
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from modules.errors import BindingError, SpecError
from modules.gates import Constant, GateKind, GateOp, Input, Param, cnot, rx, ry, rz

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundGate:
    kind: GateKind
    qubits: tuple[int, ...]
    angle: float | None


@dataclass(frozen=True)
class ParamCircuit:
    """Ordered gate list whose angles come from inputs, trainable parameters or constants"""
    n_qubits: int
    ops: tuple[GateOp, ...]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            if any(q >= self.n_qubits for q in op.qubits):
                raise BindingError(f"{op.kind.name} on {op.qubits} outside a {self.n_qubits}-qubit register")

        # Indices must be dense so parameter vectors have no dead entries
        params = {op.source.index for op in self.ops if isinstance(op.source, Param)}
        if params != set(range(len(params))):
            raise SpecError(f"parameter indices must be 0..n-1, got {sorted(params)}")
        inputs = {op.source.index for op in self.ops if isinstance(op.source, Input)}
        if inputs != set(range(len(inputs))):
            raise SpecError(f"input indices must be 0..n-1, got {sorted(inputs)}")

    @cached_property
    def n_params(self) -> int:
        return len({op.source.index for op in self.ops if isinstance(op.source, Param)})

    @cached_property
    def n_inputs(self) -> int:
        return len({op.source.index for op in self.ops if isinstance(op.source, Input)})

    @cached_property
    def param_columns(self) -> tuple[np.ndarray, np.ndarray]:
        """(gate position, parameter index) for every trainable gate occurrence"""
        pairs = [(j, op.source.index) for j, op in enumerate(self.ops) if isinstance(op.source, Param)]
        cols = np.array([p[0] for p in pairs], dtype=int)
        idx = np.array([p[1] for p in pairs], dtype=int)
        return cols, idx

    @cached_property
    def input_columns(self) -> tuple[np.ndarray, np.ndarray]:
        pairs = [(j, op.source.index) for j, op in enumerate(self.ops) if isinstance(op.source, Input)]
        cols = np.array([p[0] for p in pairs], dtype=int)
        idx = np.array([p[1] for p in pairs], dtype=int)
        return cols, idx

    @cached_property
    def constant_angles(self) -> np.ndarray:
        angles = np.zeros(len(self.ops))
        for j, op in enumerate(self.ops):
            if isinstance(op.source, Constant):
                angles[j] = op.source.value
        return angles

    def angle_table(self, inputs, params) -> np.ndarray:
        """Gate angles for a batch: inputs (rows, n_inputs), params (rows, n_params) -> (rows, n_ops)"""
        raw = np.asarray(inputs, dtype=float)
        params = np.atleast_2d(np.asarray(params, dtype=float))
        # an input-free batch keeps its row count; only a flat empty vector follows the params
        if self.n_inputs == 0 and raw.ndim < 2 and raw.size == 0:
            inputs = np.zeros((params.shape[0], 0))
        else:
            inputs = np.atleast_2d(raw)
        if inputs.shape[1] != self.n_inputs:
            raise BindingError(f"circuit expects {self.n_inputs} inputs, got {inputs.shape[1]}")
        if params.shape[1] != self.n_params:
            raise BindingError(f"circuit expects {self.n_params} parameters, got {params.shape[1]}")
        rows = max(inputs.shape[0], params.shape[0])
        if inputs.shape[0] not in (1, rows) or params.shape[0] not in (1, rows):
            raise BindingError(f"cannot pair {inputs.shape[0]} input rows with {params.shape[0]} parameter rows")

        angles = np.tile(self.constant_angles, (rows, 1))
        in_cols, in_idx = self.input_columns
        angles[:, in_cols] = np.broadcast_to(inputs[:, in_idx], (rows, in_idx.size))
        p_cols, p_idx = self.param_columns
        angles[:, p_cols] = np.broadcast_to(params[:, p_idx], (rows, p_idx.size))
        return angles


class Encoding(str, Enum):
    NONE = "none"
    ANGLE_ONCE = "angle_once"
    INCREMENTAL = "incremental"


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    n_layers: int
    encoding: Encoding = Encoding.NONE
    n_inputs: int = 0
    features_per_layer: int = 0
    entangle: bool = True


def build_layered(spec: AnsatzSpec) -> ParamCircuit:
    """
    Encoding RX gates followed by n_layers variational blocks.

    Each block is RY on every qubit, RZ on every qubit, then the CNOT chain
    q_{i+1} -> q_i for i descending. Parameters are numbered layer-major,
    RY before RZ, qubit-ascending. Incremental upload places the encoding
    gates of layer l in front of variational block l.
    """
    n, layers = spec.n_qubits, spec.n_layers
    if layers < 1:
        raise SpecError(f"n_layers must be at least 1, got {layers}")
    if n < 1:
        raise SpecError(f"n_qubits must be at least 1, got {n}")

    per_layer = {layer: [] for layer in range(layers)}
    if spec.encoding is Encoding.NONE:
        if spec.n_inputs:
            raise SpecError(f"{spec.n_inputs} features given but the ansatz has no encoding")
    elif spec.encoding is Encoding.ANGLE_ONCE:
        if spec.n_inputs > n:
            raise SpecError(f"{spec.n_inputs} features do not fit one encoding layer of {n} qubits")
        per_layer[0] = list(range(spec.n_inputs))
    else:
        width = spec.features_per_layer or n
        if width > n:
            raise SpecError(f"features_per_layer={width} exceeds {n} qubits")
        if width * layers < spec.n_inputs:
            raise SpecError(f"{spec.n_inputs} features need more than {layers} layers x {width} slots")
        for feature in range(spec.n_inputs):
            per_layer[feature // width].append(feature)

    ops = []
    for layer in range(layers):
        for qubit, feature in enumerate(per_layer[layer]):
            ops.append(rx(qubit, Input(feature)))
        base = layer * 2 * n
        ops.extend(ry(q, Param(base + q)) for q in range(n))
        ops.extend(rz(q, Param(base + n + q)) for q in range(n))
        if spec.entangle:
            ops.extend(cnot(i + 1, i) for i in reversed(range(n - 1)))

    circuit = ParamCircuit(n, tuple(ops))
    logger.debug("built %d-qubit ansatz: %d ops, %d params, %d inputs",
                 n, len(ops), circuit.n_params, circuit.n_inputs)
    return circuit


def build_boston(n_qubits: int = 4, n_features: int = 13, n_layers: int = 5) -> ParamCircuit:
    """Incremental data-uploading ansatz for the thirteen Boston housing features"""
    if n_layers * n_qubits < n_features:
        raise SpecError(f"{n_layers} layers x {n_qubits} qubits cannot hold {n_features} features")
    return build_layered(AnsatzSpec(
        n_qubits=n_qubits,
        n_layers=n_layers,
        encoding=Encoding.INCREMENTAL,
        n_inputs=n_features,
        features_per_layer=n_qubits,
    ))


def bind(circuit: ParamCircuit, inputs, params) -> list[BoundGate]:
    """Resolve every angle source of the circuit to radians"""
    inputs = np.asarray(inputs, dtype=float).reshape(-1)
    params = np.asarray(params, dtype=float).reshape(-1)
    if inputs.size != circuit.n_inputs or params.size != circuit.n_params:
        raise BindingError(
            f"expected {circuit.n_inputs} inputs / {circuit.n_params} params, "
            f"got {inputs.size} / {params.size}"
        )
    angles = circuit.angle_table(inputs[None, :], params[None, :])[0]
    return [
        BoundGate(op.kind, op.qubits, float(angles[j]) if op.kind.is_rotation else None)
        for j, op in enumerate(circuit.ops)
    ]


FRIEDMAN_SPEC = AnsatzSpec(n_qubits=5, n_layers=5, encoding=Encoding.ANGLE_ONCE, n_inputs=5)
IRIS_SPEC = AnsatzSpec(n_qubits=4, n_layers=5, encoding=Encoding.ANGLE_ONCE, n_inputs=4)
TOY_SPEC = AnsatzSpec(n_qubits=4, n_layers=5, encoding=Encoding.NONE)
BOSTON_LAYERS = 5

# x = pi * <Z...Z> maps the circuit output onto the toy search domain [-pi, pi]
TOY_OUTPUT_SCALE = math.pi
