"""
Gate vocabulary for parameterized circuits: rotations about X, Y, Z and CNOT
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from modules.errors import BindingError, UnsupportedGeneratorError


class GateKind(str, Enum):
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CNOT = "cnot"

    @property
    def is_rotation(self) -> bool:
        return self is not GateKind.CNOT


@dataclass(frozen=True)
class Constant:
    """Fixed angle in radians"""
    value: float


@dataclass(frozen=True)
class Input:
    """Angle read from feature `index` of the data point"""
    index: int


@dataclass(frozen=True)
class Param:
    """Angle read from trainable parameter `index`"""
    index: int


AngleSource = Union[Constant, Input, Param]


@dataclass(frozen=True)
class GateOp:
    """
    One gate of a circuit.

    Rotations follow R_P(phi) = exp(-i phi P / 2). CNOT qubits are ordered
    (control, target). Qubit q is bit q of the basis index (little-endian).
    """
    kind: GateKind
    qubits: tuple[int, ...]
    source: AngleSource | None = None

    def __post_init__(self):
        if self.kind.is_rotation:
            if len(self.qubits) != 1:
                raise BindingError(f"{self.kind.name} acts on exactly one qubit, got {self.qubits}")
            if self.source is None:
                raise BindingError(f"{self.kind.name} on qubit {self.qubits[0]} has no angle source")
        else:
            if self.source is not None:
                raise UnsupportedGeneratorError("CNOT carries no angle and cannot be trained")
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise BindingError(f"CNOT needs two distinct qubits, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise BindingError(f"negative qubit index in {self.qubits}")


def rx(qubit: int, source: AngleSource) -> GateOp:
    return GateOp(GateKind.RX, (qubit,), source)


def ry(qubit: int, source: AngleSource) -> GateOp:
    return GateOp(GateKind.RY, (qubit,), source)


def rz(qubit: int, source: AngleSource) -> GateOp:
    return GateOp(GateKind.RZ, (qubit,), source)


def cnot(control: int, target: int) -> GateOp:
    return GateOp(GateKind.CNOT, (control, target))
