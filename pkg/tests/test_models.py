import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    I2,
    Y,
    apply_by_index,
    dense_unitary,
    pooling_oracle,
    prob1,
    product_state,
    rot,
)
from qcnn_forge.encodings import fragment_matrices
from qcnn_forge.library import baseline_circuit
from qcnn_forge.models import (
    NAMED_MODELS,
    POOLING_CIRCUIT,
    HybridLayer,
    HybridModel,
    ModelError,
    RegularModel,
    StackLayer,
    apply_interpolation,
    apply_pooling_layer,
    grid_search_menu,
    hybrid_forward,
    interpolation_pairs,
    model_from_json,
    model_to_json,
    named_model,
    pool_2x2_pairs,
    pooling_unitary,
    regular_forward,
    regular_forward_dense,
)
from qcnn_forge.qsim import ParameterizedCircuit, circuit_unitary, haar_random_states

GRIDS = [(2, 2), (2, 4), (4, 2), (4, 4)]


class TestPoolingUnitary:
    def test_zero_is_identity(self):
        assert np.allclose(pooling_unitary(0.0, 0.0), np.eye(4))

    def test_unitary(self):
        rng = np.random.default_rng(0)
        for t0, t1 in rng.uniform(-7, 7, (100, 2)):
            u = pooling_unitary(t0, t1)
            assert np.allclose(u @ u.conj().T, np.eye(4), atol=1e-12)

    def test_matches_explicit_product(self):
        assert np.allclose(pooling_unitary(0.7, -1.3), pooling_oracle(0.7, -1.3))

    def test_control_one_applies_rz(self):
        u = pooling_unitary(0.9, 0.4)
        assert np.allclose(u[2:, 2:], rot(np.diag([1, -1]), 0.4))
        assert np.allclose(u[:2, :2], rot(np.array([[0, 1], [1, 0]]), 0.9))

    def test_circuit_form(self):
        # the circuit's qubit 0 is the control, but it is the least significant bit of the full unitary
        swap = np.eye(4)[[0, 2, 1, 3]]
        full = circuit_unitary(POOLING_CIRCUIT, [0.3, 1.1])
        assert np.allclose(swap @ full @ swap, pooling_unitary(0.3, 1.1))

    def test_batched(self):
        u = pooling_unitary(np.array([0.1, 0.2]), np.array([0.3, 0.4]))
        assert u.shape == (2, 4, 4)
        assert np.allclose(u[1], pooling_unitary(0.2, 0.4))


class TestPoolingLayers:
    def test_2x2_pairs(self):
        assert pool_2x2_pairs(np.arange(4).reshape(2, 2)) == [(3, 2), (1, 0), (2, 0)]

    def test_interpolation_pairs_3x3(self):
        grid = np.arange(9).reshape(3, 3)
        assert interpolation_pairs(grid) == [(8, 7), (2, 1), (5, 4), (6, 3), (7, 4)]

    @pytest.mark.parametrize("rows, cols", GRIDS)
    def test_pool_zero_angles_identity(self, rows, cols):
        psi = haar_random_states(rows * cols, 1, np.random.default_rng(rows + cols))[0]
        assert np.allclose(apply_pooling_layer(psi, rows, cols, [0.0, 0.0]), psi)

    @pytest.mark.parametrize("rows, cols", GRIDS + [(3, 3), (3, 4)])
    def test_interpolation_zero_angles_identity(self, rows, cols):
        psi = haar_random_states(rows * cols, 1, np.random.default_rng(rows * cols))[0]
        assert np.allclose(apply_interpolation(psi, rows, cols, [0.0, 0.0]), psi)

    def test_pool_4x4_against_ordered_product(self):
        rng = np.random.default_rng(3)
        psi = haar_random_states(16, 1, rng)[0]
        params = rng.uniform(0, 2 * np.pi, 2)
        u = pooling_oracle(*params)
        pairs = []
        for tl in (0, 2, 8, 10):
            tr, bl, br = tl + 1, tl + 4, tl + 5
            pairs += [(br, bl), (tr, tl), (bl, tl)]
        expected = psi
        for pair in pairs:
            expected = apply_by_index(expected, u, pair)
        assert np.allclose(apply_pooling_layer(psi, 4, 4, params), expected, atol=1e-10)

    def test_interpolation_4x4_seven_unitaries(self):
        rng = np.random.default_rng(4)
        psi = haar_random_states(16, 1, rng)[0]
        params = rng.uniform(0, 2 * np.pi, 2)
        u = pooling_oracle(*params)
        pairs = [(15, 14), (3, 2), (7, 6), (11, 10), (12, 8), (13, 9), (14, 10)]
        expected = psi
        for pair in pairs:
            expected = apply_by_index(expected, u, pair)
        assert len(interpolation_pairs(np.arange(16).reshape(4, 4))) == 7
        assert np.allclose(apply_interpolation(psi, 4, 4, params), expected, atol=1e-10)

    def test_odd_grid_rejected(self):
        with pytest.raises(ModelError):
            pool_2x2_pairs(np.arange(6).reshape(2, 3))


def _hybrid(variant, kernel, circuit, pooling=False):
    return HybridModel(variant, (HybridLayer(kernel, kernel, circuit, pooling),))


def _qe_column(x):
    return rot(Y, x) @ np.array([1, 0], dtype=complex)


class TestHybrid:
    def test_identity_conv_zero_input(self):
        model = _hybrid("II", 2, ParameterizedCircuit(4))
        assert hybrid_forward(model, np.zeros((2, 2)), []) == pytest.approx(0.0)

    def test_c1_against_statevector(self):
        circuit = baseline_circuit("C1", 4, "hybrid")
        model = _hybrid("II", 2, circuit)
        img = np.array([[0.3, 1.2], [2.0, 0.7]])
        params = np.zeros(circuit.num_params)
        psi = product_state([_qe_column(v) for v in img.ravel()])
        expected = prob1(dense_unitary(circuit, params) @ psi, 3)
        out = hybrid_forward(model, img, params)
        assert out == pytest.approx(expected, abs=1e-12)
        # the CZ ladder is diagonal, so only the H-rotated last input matters
        assert out == pytest.approx((1 - np.sin(0.7)) / 2, abs=1e-12)

    def test_types_agree_for_1x1_kernel(self):
        c = ParameterizedCircuit.build(1, [("U3", 0, (0, 1, 2))])
        img = np.array([[1.1]])
        params = [0.4, 0.2, -0.9]
        assert hybrid_forward(_hybrid("I", 1, c), img, params) == pytest.approx(
            hybrid_forward(_hybrid("II", 1, c), img, params)
        )

    def test_type_one_rows_then_column(self):
        c = baseline_circuit("C2", 2, "hybrid")
        rng = np.random.default_rng(5)
        params = rng.uniform(0, 6, c.num_params)
        img = rng.uniform(0, np.pi, (2, 2))
        u = dense_unitary(c, params)

        def run(values):
            return prob1(u @ product_state([_qe_column(v) for v in values]), 1)

        rows = [run(img[0]), run(img[1])]
        expected = run([rows[0] * np.pi, rows[1] * np.pi])
        assert hybrid_forward(_hybrid("I", 2, c), img, params) == pytest.approx(expected, abs=1e-12)

    def test_pooling_zero_angles_reads_bottom_right(self):
        ident = ParameterizedCircuit(1)
        model = HybridModel("II", (HybridLayer(1, 1, ident, pooling=True),))
        img = np.array([[0.2, 0.4], [0.6, 1.0]])
        # the 1x1 layer measures sin^2(x/2); pooling re-encodes it as an angle and reads that cell
        p = np.sin(1.0 / 2) ** 2
        assert hybrid_forward(model, img, [0.0, 0.0]) == pytest.approx(np.sin(np.pi * p / 2) ** 2)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_outputs_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        c = baseline_circuit("C5", 4, "hybrid")
        model = HybridModel(
            "II", (HybridLayer(2, 2, c), HybridLayer(2, 2, c, pooling=True))
        )
        out = hybrid_forward(model, rng.uniform(0, np.pi, (5, 8, 8)), rng.uniform(-7, 7, model.num_params))
        assert np.all((out >= 0) & (out <= 1))

    def test_validation(self):
        with pytest.raises(ModelError):
            _hybrid("III", 2, ParameterizedCircuit(4))
        with pytest.raises(ModelError):
            _hybrid("I", 2, ParameterizedCircuit(4))
        model = _hybrid("II", 2, ParameterizedCircuit(4))
        with pytest.raises(ModelError):
            hybrid_forward(model, np.zeros((3, 3)), [])
        with pytest.raises(ModelError):
            hybrid_forward(model, np.zeros((2, 2)), [0.1])


class TestRegular:
    def test_menu_sizes(self):
        assert [len(grid_search_menu(n)) for n in (1, 4, 16)] == [3, 21, 39]
        with pytest.raises(ModelError):
            grid_search_menu(9)

    def test_named_models(self):
        assert named_model("regular-4q-best").name == "U3-U3-U3-U3 -> C5"
        assert named_model("regular-4q-best").num_params == 56
        assert named_model("regular-16q-best").num_params == 45
        assert named_model("U3-U3-U3 -> Pool-C2").num_qubits == 16
        assert set(NAMED_MODELS) == {"regular-1q-best", "regular-4q-best", "regular-16q-best"}
        with pytest.raises(ModelError):
            named_model("nonexistent")

    def test_zero_weights_blank_image(self):
        model = named_model("U3-U3-U3 -> Pool-U3-Pool-U3")
        assert regular_forward(model, np.zeros((32, 32)), np.zeros(model.num_params)) == pytest.approx(0.0)

    def test_four_qubit_against_dense_oracle(self):
        model = named_model("regular-4q-best")
        rng = np.random.default_rng(6)
        w = rng.uniform(0, 2 * np.pi, model.num_params)
        img = rng.uniform(0, np.pi, (32, 32))
        nf = model.fragment.num_params
        mats = fragment_matrices(img, model.fragment, w[:nf]).reshape(-1, 2, 2)
        psi = product_state([m[:, 0] for m in mats])
        conv = model.stack[0].circuit
        expected = prob1(dense_unitary(conv, w[nf:]) @ psi, 3)
        assert regular_forward(model, img, w) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize(
        "name",
        ["U3-U3-U3-U3 -> Pool-U3", "Rx-U3-Ry -> Pool-C5", "U3-U3-U3 -> Interpol-C2", "Rx-Ry-Rz -> Pool-U3-Pool-U3"],
    )
    def test_register_engine_matches_dense(self, name):
        model = named_model(name)
        rng = np.random.default_rng(7)
        w = rng.uniform(0, 2 * np.pi, model.num_params)
        imgs = rng.uniform(0, np.pi, (3, 32, 32))
        assert np.allclose(regular_forward(model, imgs, w), regular_forward_dense(model, imgs, w), atol=1e-12)

    def test_batch_shape(self):
        model = named_model("regular-1q-best")
        out = regular_forward(model, np.zeros((2, 3, 32, 32)), np.ones(model.num_params))
        assert out.shape == (2, 3)

    def test_layer_validation(self):
        frag = named_model("regular-4q-best").fragment
        with pytest.raises(ModelError):
            RegularModel(frag, (StackLayer("conv", baseline_circuit("C2", 2)),))
        with pytest.raises(ModelError):
            StackLayer("conv")
        with pytest.raises(ModelError):
            StackLayer("dropout")
        with pytest.raises(ModelError):
            regular_forward(named_model("regular-4q-best"), np.zeros((32, 32)), np.zeros(3))


class TestSerialization:
    @pytest.mark.parametrize("name", ["regular-4q-best", "regular-16q-best", "U3-U3-U3 -> Interpol-AS"])
    def test_regular_round_trip(self, name):
        model = named_model(name)
        again = model_from_json(model_to_json(model))
        w = np.random.default_rng(8).uniform(0, 6, model.num_params)
        img = np.random.default_rng(9).uniform(0, np.pi, (32, 32))
        assert again.name == model.name
        assert regular_forward(again, img, w) == pytest.approx(regular_forward(model, img, w))

    def test_hybrid_round_trip_inline_circuit(self):
        c = ParameterizedCircuit.build(4, [("RY", 3, 0), ("CX", (0, 3))])
        model = HybridModel("II", (HybridLayer(2, 2, c, pooling=False),), "custom")
        again = model_from_json(model_to_json(model))
        assert again.layers[0].circuit == c and again.variant == "II"

    def test_malformed(self):
        with pytest.raises(ModelError):
            model_from_json('{"type": "regular"}')
        with pytest.raises(ModelError):
            model_from_json('{"type": "tensor"}')
