import numpy as np
import pytest

from modules.circuit import (
    FRIEDMAN_SPEC,
    IRIS_SPEC,
    TOY_SPEC,
    AnsatzSpec,
    Encoding,
    ParamCircuit,
    bind,
    build_boston,
    build_layered,
)
from modules.errors import BindingError, SpecError, UnsupportedGeneratorError
from modules.gates import Constant, GateKind, GateOp, Input, Param, cnot, rx, ry


# --- Reference ansaetze ---

def test_friedman_shape(friedman_circuit):
    assert friedman_circuit.n_params == 50
    assert friedman_circuit.n_inputs == 5
    assert friedman_circuit.n_qubits == 5


def test_iris_and_toy_shapes(iris_circuit, toy_circuit):
    assert iris_circuit.n_inputs == 4
    assert iris_circuit.n_params == 40
    assert toy_circuit.n_inputs == 0
    assert toy_circuit.n_params == 40


def test_boston_shape(boston_circuit):
    assert boston_circuit.n_params == 40
    assert boston_circuit.n_inputs == 13
    encoders = [op for op in boston_circuit.ops if isinstance(op.source, Input)]
    assert len(encoders) == 13


def test_boston_incremental_upload_order(boston_circuit):
    # Encoding gates of layer l sit directly before variational block l
    layer_of_feature = {}
    layer = -1
    for op in boston_circuit.ops:
        if isinstance(op.source, Param) and op.kind is GateKind.RY and op.source.index % 8 == 0:
            layer += 1
        if isinstance(op.source, Input):
            layer_of_feature[op.source.index] = layer + 1
    assert [layer_of_feature[f] for f in range(13)] == [0] * 4 + [1] * 4 + [2] * 4 + [3]


def test_layer_block_structure():
    circuit = build_layered(AnsatzSpec(n_qubits=3, n_layers=1))
    kinds = [op.kind for op in circuit.ops]
    assert kinds == [GateKind.RY] * 3 + [GateKind.RZ] * 3 + [GateKind.CNOT] * 2
    assert [op.qubits for op in circuit.ops[-2:]] == [(2, 1), (1, 0)]
    assert [op.source.index for op in circuit.ops[:6]] == list(range(6))


def test_without_entanglement():
    circuit = build_layered(AnsatzSpec(n_qubits=3, n_layers=2, entangle=False))
    assert all(op.kind is not GateKind.CNOT for op in circuit.ops)


# --- Invalid specifications ---

def test_too_many_features_for_one_encoding_layer():
    with pytest.raises(SpecError):
        build_layered(AnsatzSpec(n_qubits=4, n_layers=5, encoding=Encoding.ANGLE_ONCE, n_inputs=13))


def test_features_without_encoding():
    with pytest.raises(SpecError):
        build_layered(AnsatzSpec(n_qubits=4, n_layers=5, encoding=Encoding.NONE, n_inputs=2))


def test_boston_needs_enough_layers():
    with pytest.raises(SpecError):
        build_boston(4, 13, 3)


def test_zero_layers():
    with pytest.raises(SpecError):
        build_layered(AnsatzSpec(n_qubits=2, n_layers=0))


def test_sparse_parameter_indices_rejected():
    with pytest.raises(SpecError):
        ParamCircuit(1, (ry(0, Param(0)), ry(0, Param(2))))


def test_gate_outside_register_rejected():
    with pytest.raises(BindingError):
        ParamCircuit(2, (ry(2, Param(0)),))


def test_cnot_cannot_be_trained():
    with pytest.raises(UnsupportedGeneratorError):
        GateOp(GateKind.CNOT, (0, 1), Param(0))


def test_cnot_needs_distinct_qubits():
    with pytest.raises(BindingError):
        cnot(1, 1)


def test_rotation_needs_source():
    with pytest.raises(BindingError):
        GateOp(GateKind.RX, (0,))


# --- Binding ---

def test_bind_zero_params_gives_zero_angles(toy_circuit):
    gates = bind(toy_circuit, np.zeros(0), np.zeros(40))
    assert all(g.angle == 0.0 for g in gates if g.kind.is_rotation)
    assert all(g.angle is None for g in gates if g.kind is GateKind.CNOT)


def test_bind_inputs_fill_encoding_gates(friedman_circuit):
    gates = bind(friedman_circuit, np.full(5, np.pi), np.zeros(50))
    encoders = [g for g in gates if g.kind is GateKind.RX]
    assert len(encoders) == 5
    assert all(g.angle == np.pi for g in encoders)


def test_bind_length_mismatch(friedman_circuit):
    with pytest.raises(BindingError):
        bind(friedman_circuit, np.zeros(5), np.zeros(49))


def test_shared_parameter_and_constants():
    circuit = ParamCircuit(1, (ry(0, Param(0)), rx(0, Constant(0.25)), ry(0, Param(0))))
    assert circuit.n_params == 1
    angles = circuit.angle_table(np.zeros((1, 0)), np.array([[0.5]]))
    np.testing.assert_allclose(angles, [[0.5, 0.25, 0.5]])


def test_angle_table_broadcasts_single_param_row(friedman_circuit, rng):
    inputs = rng.uniform(-np.pi, np.pi, (3, 5))
    table = friedman_circuit.angle_table(inputs, np.zeros((1, 50)))
    assert table.shape == (3, len(friedman_circuit.ops))
    np.testing.assert_allclose(table[:, :5], inputs)


def test_angle_table_rejects_row_mismatch(friedman_circuit):
    with pytest.raises(BindingError):
        friedman_circuit.angle_table(np.zeros((3, 5)), np.zeros((2, 50)))


@pytest.mark.parametrize("spec", [FRIEDMAN_SPEC, IRIS_SPEC, TOY_SPEC])
def test_param_columns_cover_every_parameter(spec):
    circuit = build_layered(spec)
    cols, idx = circuit.param_columns
    assert sorted(idx.tolist()) == list(range(circuit.n_params))
    assert all(circuit.ops[c].kind in (GateKind.RY, GateKind.RZ) for c in cols)
