import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcnn_forge.qsim import ParameterizedCircuit, last_qubit_prob1, run_circuit
from qcnn_forge.training import (
    AdamState,
    BsocSpec,
    TrainConfig,
    TrainRun,
    adam_step,
    aggregate_runs,
    evaluate,
    finite_diff_gradient,
    label_to_target,
    mae_loss,
    predict_class,
    train,
)


def toy_forward(images, params):
    """P(1) of Ry(w0 x0 + w1) Rz(x1)|0>: a one-qubit classifier on 2-pixel images."""
    images = np.asarray(images)
    return np.sin((params[0] * images[..., 0] + params[1]) / 2) ** 2


def toy_data(rng, n=40):
    labels = np.arange(n) % 2
    images = np.stack([np.where(labels == 1, 2.5, 0.5) + rng.normal(0, 0.05, n), rng.uniform(0, 3, n)], axis=-1)
    return np.clip(images, 0, 3.1), labels


class TestBsoc:
    @pytest.mark.parametrize("n, cls, expected", [(2, 0, 0.25), (2, 1, 0.75), (4, 2, 0.625)])
    def test_centers(self, n, cls, expected):
        assert label_to_target(cls, BsocSpec(n, sigma=0.0)) == pytest.approx(expected)

    def test_noise_clamped(self):
        targets = label_to_target(np.array([0, 1] * 500), BsocSpec(2, sigma=1.0), np.random.default_rng(0))
        assert targets.min() >= 0.0 and targets.max() <= 1.0
        assert targets.std() > 0

    def test_label_range(self):
        with pytest.raises(ValueError):
            label_to_target(2, BsocSpec(2))

    @pytest.mark.parametrize("n, out, cls", [(2, 0.6, 1), (2, 0.5, 1), (4, 0.0, 0), (4, 1.0, 3)])
    def test_predict(self, n, out, cls):
        assert predict_class(out, BsocSpec(n)) == cls

    @given(out=st.floats(0, 1), n=st.integers(2, 10))
    def test_predict_total(self, out, n):
        c = predict_class(out, BsocSpec(n))
        assert 0 <= c < n
        assert BsocSpec(n).edges[c] <= out

    def test_predict_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            predict_class(1.2, BsocSpec(2))


class TestLoss:
    def test_cases(self):
        assert mae_loss([0.2, 0.3], [0.2, 0.3]) == 0.0
        assert mae_loss([0.25, 0.75], [0.75, 0.25]) == pytest.approx(0.5)
        assert mae_loss([0.3], [0.1]) == pytest.approx(0.2)

    def test_errors(self):
        with pytest.raises(ValueError):
            mae_loss([], [])
        with pytest.raises(ValueError):
            mae_loss([0.1], [0.1, 0.2])


class TestGradient:
    def test_constant(self):
        assert np.array_equal(finite_diff_gradient(lambda p: 3.0, np.ones(4)), np.zeros(4))

    def test_linear(self):
        assert np.allclose(finite_diff_gradient(lambda p: p[0], np.zeros(3), 0.37), [1, 0, 0])

    def test_against_parameter_shift(self):
        circuit = ParameterizedCircuit.build(2, [("RY", 0, 0), ("CX", (0, 1)), ("RX", 1, 1), ("RZ", 1, 2)])
        rng = np.random.default_rng(0)

        def loss(p):
            return float(last_qubit_prob1(run_circuit(circuit, p)))

        for _ in range(5):
            theta = rng.uniform(0, 2 * np.pi, 3)
            shift = np.array([(loss(theta + np.pi / 2 * e) - loss(theta - np.pi / 2 * e)) / 2 for e in np.eye(3)])
            assert np.allclose(finite_diff_gradient(loss, theta, 1e-4), shift, atol=1e-3)

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            finite_diff_gradient(lambda p: 0.0, np.zeros(1), 0.0)


class TestAdam:
    def test_zero_gradient(self):
        p = np.array([0.3, -1.0])
        new, state = adam_step(AdamState.zeros(2), p, np.zeros(2))
        assert np.array_equal(new, p) and state.step == 1

    def test_first_iterate(self):
        g = np.array([0.5, -2.0])
        new, _ = adam_step(AdamState.zeros(2), np.zeros(2), g, lr=0.01)
        # m_hat = g and v_hat = g^2 after bias correction
        assert np.allclose(new, -0.01 * g / (np.abs(g) + 1e-8))

    def test_constant_gradient_step_size(self):
        p, state = np.zeros(1), AdamState.zeros(1)
        for _ in range(500):
            prev = p
            p, state = adam_step(state, p, np.array([0.3]), lr=0.05)
        assert p[0] - prev[0] == pytest.approx(-0.05, rel=1e-3)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            adam_step(AdamState.zeros(2), np.zeros(3), np.zeros(3))


class TestTrain:
    def setup_method(self):
        rng = np.random.default_rng(4)
        self.train_set = toy_data(rng)
        self.test_set = toy_data(rng, 20)

    def run(self, **kwargs):
        cfg = TrainConfig(**{"num_batches": 30, "batch_size": 8, "eval_every": 10, **kwargs})
        return train(toy_forward, 2, *self.train_set, *self.test_set, cfg, BsocSpec(2))

    def test_zero_batches(self):
        run = self.run(num_batches=0)
        assert run.initial_params == run.final_params
        assert len(run.history) == 1 and run.history[0].batch == 0

    def test_eval_schedule_and_ranges(self):
        run = self.run()
        assert [p.batch for p in run.history] == [0, 10, 20, 30]
        for p in run.history:
            assert p.loss >= 0 and 0 <= p.accuracy <= 100

    def test_deterministic(self):
        assert self.run().to_dict() == self.run().to_dict()
        assert self.run(seed=1).to_dict() != self.run(seed=2).to_dict()

    def test_learns_toy_task(self):
        run = self.run(num_batches=400, learning_rate=0.1, eval_every=100)
        assert run.history[-1].loss < run.history[0].loss
        assert run.final_accuracy >= 80

    def test_initial_params_respected(self):
        cfg = TrainConfig(num_batches=0)
        run = train(toy_forward, 2, *self.train_set, *self.test_set, cfg, initial_params=[0.1, 0.2])
        assert run.initial_params == [0.1, 0.2]

    def test_serialization(self):
        run = self.run()
        again = TrainRun.from_dict(json.loads(run.to_json()))
        assert again.to_dict() == run.to_dict()
        lines = run.history_csv().splitlines()
        assert lines[0] == "batch,loss,accuracy" and len(lines) == 5

    def test_aggregate(self):
        runs = [self.run(seed=s) for s in range(3)]
        rows = aggregate_runs(runs)
        assert [r["batch"] for r in rows] == [0, 10, 20, 30]
        accs = [r.history[-1].accuracy for r in runs]
        assert rows[-1]["accuracy_mean"] == pytest.approx(np.mean(accs))
        assert aggregate_runs([]) == []

    def test_evaluate_uses_noiseless_centres(self):
        images, labels = self.test_set
        acc, loss = evaluate(lambda x, p: np.where(labels == 1, 0.75, 0.25), [0.0], images, labels, BsocSpec(2))
        assert acc == 100.0 and loss == pytest.approx(0.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0)
        with pytest.raises(ValueError):
            TrainConfig(runs=0)


def test_untrained_model_near_chance(mnist_dir):
    from qcnn_forge.data import load_mnist, prepare
    from qcnn_forge.models import named_model, regular_forward

    ds = prepare(load_mnist(mnist_dir), "0v1", max_test_per_class=100)
    model = named_model("regular-1q-best")
    params = np.random.default_rng(0).uniform(0, 2 * np.pi, model.num_params)
    acc, _ = evaluate(lambda x, p: regular_forward(model, x, p), params, ds.test_images, ds.test_labels, BsocSpec(2))
    assert acc == pytest.approx(50, abs=15)
