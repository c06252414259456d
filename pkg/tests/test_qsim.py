import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_unitary, oracle_gate, partial_trace_purity, random_circuit
from qcnn_forge.qsim import (
    CircuitError,
    GateApplication,
    GateKind,
    ParameterizedCircuit,
    apply_gate,
    apply_matrix,
    basis_state,
    circuit_complexity,
    circuit_from_json,
    circuit_to_json,
    circuit_unitary,
    fidelity,
    gate_matrix,
    haar_random_states,
    last_qubit_prob1,
    run_circuit,
    single_qubit_purity,
    zero_state,
)

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


class TestGateMatrix:
    def test_u3_zero_is_identity(self):
        assert np.allclose(gate_matrix(GateKind.U3, [0, 0, 0]), np.eye(2))

    def test_rx_pi(self):
        assert np.allclose(gate_matrix(GateKind.RX, [np.pi]), [[0, -1j], [-1j, 0]])

    def test_crz_zero_is_identity(self):
        assert np.allclose(gate_matrix(GateKind.CRZ, [0.0]), np.eye(4))

    @pytest.mark.parametrize("kind", list(GateKind))
    def test_matches_exponential_definitions(self, kind):
        a = np.linspace(0.3, 1.1, kind.num_params)
        assert np.allclose(gate_matrix(kind, a), oracle_gate(kind.label, a))

    @pytest.mark.parametrize("kind", list(GateKind))
    @given(theta=angles, phi=angles, lam=angles)
    @settings(max_examples=20, deadline=None)
    def test_unitary(self, kind, theta, phi, lam):
        m = gate_matrix(kind, [theta, phi, lam][: kind.num_params])
        assert np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=1e-12)

    def test_batched_angles(self):
        thetas = np.array([[0.1], [0.2], [0.3]])
        batch = gate_matrix(GateKind.RY, thetas)
        assert batch.shape == (3, 2, 2)
        assert np.allclose(batch[1], gate_matrix(GateKind.RY, [0.2]))

    def test_wrong_angle_count(self):
        with pytest.raises(CircuitError):
            gate_matrix(GateKind.U3, [0.1])
        with pytest.raises(CircuitError):
            gate_matrix(GateKind.H, [0.1])

    def test_parse(self):
        assert GateKind.parse("crz") is GateKind.CRZ
        with pytest.raises(CircuitError):
            GateKind.parse("toffoli")


class TestApply:
    def test_hadamard(self):
        out = apply_gate(zero_state(1), GateApplication(GateKind.H, (0,)))
        assert np.allclose(out, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_little_endian_ordering(self):
        out = apply_gate(zero_state(2), GateApplication(GateKind.X, (1,)))
        assert np.allclose(out, basis_state(2, 0b10))

    def test_cx_on_zero_control(self):
        out = apply_gate(zero_state(2), GateApplication(GateKind.CX, (0, 1)))
        assert np.allclose(out, zero_state(2))

    def test_cx_flips_target_when_control_set(self):
        out = apply_gate(basis_state(2, 0b01), GateApplication(GateKind.CX, (0, 1)))
        assert np.allclose(out, basis_state(2, 0b11))

    def test_first_listed_qubit_is_most_significant(self):
        m = np.arange(16).reshape(4, 4).astype(complex)
        state = np.arange(1, 9).astype(complex)
        from oracles import embed

        assert np.allclose(apply_matrix(state, m, (2, 0)), embed(m, (2, 0), 3) @ state)

    def test_batched_states_and_matrices(self):
        rng = np.random.default_rng(0)
        states = haar_random_states(3, 5, rng)
        mats = gate_matrix(GateKind.CRY, rng.uniform(0, 6, (5, 1)))
        out = apply_matrix(states, mats, (1, 2))
        for i in range(5):
            assert np.allclose(out[i], apply_matrix(states[i], mats[i], (1, 2)))

    def test_rejects_bad_qubit(self):
        with pytest.raises(CircuitError):
            apply_matrix(zero_state(2), np.eye(2), (2,))


class TestRunCircuit:
    def test_empty_circuit_identity(self):
        psi = haar_random_states(2, 1, np.random.default_rng(1))[0]
        assert np.allclose(run_circuit(ParameterizedCircuit(2), (), psi), psi)

    def test_parameter_sharing(self):
        c = ParameterizedCircuit.build(1, [("Ry", 0, 0), ("Ry", 0, 0)])
        single = ParameterizedCircuit.build(1, [("Ry", 0, 0)])
        assert np.allclose(run_circuit(c, [np.pi / 4]), run_circuit(single, [np.pi / 2]))

    def test_circuit2_zero_angles(self):
        c = ParameterizedCircuit.build(2, [("Ry", 0, 0), ("CX", (0, 1)), ("Ry", 1, 1)])
        assert np.allclose(run_circuit(c, [0, 0]), zero_state(2))

    def test_batched_params(self):
        rng = np.random.default_rng(2)
        c = random_circuit(rng, 3, 8)
        params = rng.uniform(0, 2 * np.pi, (4, c.num_params))
        out = run_circuit(c, params)
        assert out.shape == (4, 8)
        assert np.allclose(out[2], run_circuit(c, params[2]))

    def test_zero_parameter_circuit_batched(self):
        c = ParameterizedCircuit.build(2, [("H", 0)])
        states = haar_random_states(2, 3, np.random.default_rng(0))
        assert run_circuit(c, np.zeros((3, 0)), states).shape == (3, 4)

    def test_wrong_param_count(self):
        c = ParameterizedCircuit.build(1, [("Ry", 0, 0)])
        with pytest.raises(CircuitError):
            run_circuit(c, [0.1, 0.2])

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_dense_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        c = random_circuit(rng, n, 12)
        params = rng.uniform(0, 2 * np.pi, c.num_params)
        assert np.allclose(circuit_unitary(c, params), dense_unitary(c, params), atol=1e-10)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_norm_preserved(self, seed):
        rng = np.random.default_rng(seed)
        c = random_circuit(rng, 3, 10)
        psi = haar_random_states(3, 1, rng)[0]
        out = run_circuit(c, rng.uniform(0, 2 * np.pi, c.num_params), psi)
        assert np.isclose(np.linalg.norm(out), 1.0, atol=1e-12)


class TestObservables:
    def test_fidelity_cases(self):
        plus = np.array([1, 1]) / np.sqrt(2)
        assert fidelity(plus, plus) == pytest.approx(1.0)
        assert fidelity(zero_state(1), basis_state(1, 1)) == pytest.approx(0.0)
        assert fidelity(zero_state(1), plus) == pytest.approx(0.5)

    def test_prob1(self):
        assert last_qubit_prob1(zero_state(1)) == 0.0
        plus = np.array([1, 1]) / np.sqrt(2)
        assert last_qubit_prob1(plus) == pytest.approx(0.5)
        ry = run_circuit(ParameterizedCircuit.build(1, [("Ry", 0, 0)]), [np.pi / 2])
        assert last_qubit_prob1(ry) == pytest.approx(np.sin(np.pi / 4) ** 2)

    def test_prob1_reads_named_qubit(self):
        assert last_qubit_prob1(basis_state(3, 0b010), 1) == pytest.approx(1.0)
        assert last_qubit_prob1(basis_state(3, 0b010)) == pytest.approx(0.0)

    def test_purity_cases(self):
        assert single_qubit_purity(zero_state(2), 0) == pytest.approx(1.0)
        bell = (basis_state(2, 0) + basis_state(2, 3)) / np.sqrt(2)
        assert single_qubit_purity(bell, 0) == pytest.approx(0.5)
        c = ParameterizedCircuit.build(2, [("Ry", 0, 0), ("CX", (0, 1))])
        psi = run_circuit(c, [np.pi / 4])
        assert single_qubit_purity(psi, 1) == pytest.approx(partial_trace_purity(psi, 1))
        assert single_qubit_purity(psi, 1) == pytest.approx(1 - 0.5 * np.sin(np.pi / 4) ** 2)

    def test_purity_needs_two_qubits(self):
        with pytest.raises(CircuitError):
            single_qubit_purity(zero_state(1), 0)


class TestComplexityAndJson:
    def test_empty(self):
        assert circuit_complexity(ParameterizedCircuit(2)) == (0, 0, 0)

    def test_asap_depth(self):
        c = ParameterizedCircuit.build(3, [("H", 0), ("H", 1), ("CX", (0, 1)), ("H", 2), ("CX", (1, 2))])
        assert circuit_complexity(c) == (0, 3, 5)

    def test_shared_params_counted_once(self):
        c = ParameterizedCircuit.build(2, [("Ry", 0, 0), ("Ry", 1, 0), ("CRZ", (0, 1), 1)])
        assert circuit_complexity(c) == (2, 2, 3)

    def test_json_round_trip(self):
        c = random_circuit(np.random.default_rng(5), 3, 9)
        again = circuit_from_json(circuit_to_json(c))
        assert again == c
        assert json.loads(circuit_to_json(c))["num_qubits"] == 3

    def test_malformed_json(self):
        with pytest.raises(CircuitError):
            circuit_from_json('{"gates": []}')

    def test_validation(self):
        with pytest.raises(CircuitError):
            ParameterizedCircuit.build(2, [("CX", (0, 0))])
        with pytest.raises(CircuitError):
            ParameterizedCircuit.build(2, [("H", 2)])
        with pytest.raises(CircuitError):
            ParameterizedCircuit.build(1, [("Ry", 0, 3)], num_params=2)
