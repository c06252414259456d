"""Bin-based single-output classification and finite-difference Adam training.

A model emits one number in ``[0, 1]``.  For ``n`` classes the interval is
split into ``n`` equal bins; the label of class ``i`` is the bin centre
``(2i + 1) / (2n)`` plus Gaussian noise during training, and a prediction
belongs to the class whose bin contains it.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "BsocSpec",
    "label_to_target",
    "mae_loss",
    "predict_class",
    "finite_diff_gradient",
    "AdamState",
    "adam_step",
    "TrainConfig",
    "EvalPoint",
    "TrainRun",
    "train",
    "evaluate",
    "aggregate_runs",
]


@dataclass(frozen=True)
class BsocSpec:
    num_classes: int = 2
    sigma: float = 0.02

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("BSOC needs at least two classes")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.num_classes + 1) / self.num_classes

    @property
    def centers(self) -> np.ndarray:
        return (2 * np.arange(self.num_classes) + 1) / (2 * self.num_classes)


def label_to_target(class_index, spec: BsocSpec, rng: np.random.Generator | None = None):
    """Bin centre plus ``N(0, sigma)`` noise, clamped to [0, 1]; accepts arrays of labels."""
    idx = np.asarray(class_index)
    if np.any(idx < 0) or np.any(idx >= spec.num_classes):
        raise ValueError(f"class index out of range for {spec.num_classes} classes")
    target = spec.centers[idx]
    if spec.sigma > 0:
        rng = rng or np.random.default_rng()
        target = target + rng.normal(0.0, spec.sigma, size=np.shape(target))
    target = np.clip(target, 0.0, 1.0)
    return float(target) if target.ndim == 0 else target


def mae_loss(targets, predictions) -> float:
    targets = np.asarray(targets, dtype=float)
    predictions = np.asarray(predictions, dtype=float)
    if targets.size == 0:
        raise ValueError("loss of an empty batch")
    if targets.shape != predictions.shape:
        raise ValueError(f"shape mismatch {targets.shape} vs {predictions.shape}")
    return float(np.mean(np.abs(targets - predictions)))


def predict_class(output, spec: BsocSpec):
    """Index of the bin holding ``output``; a boundary goes to the upper bin and 1.0 to the last bin."""
    out = np.asarray(output, dtype=float)
    if np.any(out < 0.0) or np.any(out > 1.0) or np.any(np.isnan(out)):
        raise ValueError("outputs must lie in [0, 1]")
    cls = np.minimum(np.floor(out * spec.num_classes).astype(int), spec.num_classes - 1)
    return int(cls) if cls.ndim == 0 else cls


def finite_diff_gradient(loss_at: Callable[[np.ndarray], float], params, epsilon: float = 0.1) -> np.ndarray:
    """Forward differences ``(L(theta + eps e_j) - L(theta)) / eps``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    params = np.asarray(params, dtype=float)
    base = loss_at(params)
    grad = np.empty_like(params)
    for j in range(params.size):
        shifted = params.copy()
        shifted.flat[j] += epsilon
        grad.flat[j] = (loss_at(shifted) - base) / epsilon
    return grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size))


def adam_step(state: AdamState, params, grads, lr: float = 0.01) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns new parameters and a new state."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise ValueError("parameter, gradient and moment shapes must agree")
    step = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grads
    v = state.beta2 * state.v + (1 - state.beta2) * grads**2
    m_hat = m / (1 - state.beta1**step)
    v_hat = v / (1 - state.beta2**step)
    new = params - lr * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    return new, AdamState(m, v, step, state.beta1, state.beta2, state.eps_hat)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    num_batches: int = 200
    batch_size: int = 25
    eval_every: int = 20
    fd_epsilon: float = 0.1
    runs: int = 5
    seed: int = 0
    sigma: float = 0.02

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.eval_every < 1 or self.fd_epsilon <= 0:
            raise ValueError("learning rate, batch size, eval interval and epsilon must be positive")
        if self.num_batches < 0 or self.runs < 1:
            raise ValueError("num_batches must be non-negative and runs positive")


@dataclass(frozen=True)
class EvalPoint:
    batch: int
    loss: float
    accuracy: float


@dataclass
class TrainRun:
    seed: int
    history: list[EvalPoint] = field(default_factory=list)
    initial_params: list[float] = field(default_factory=list)
    final_params: list[float] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def final_accuracy(self) -> float:
        return self.history[-1].accuracy

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "history": [asdict(p) for p in self.history],
            "initial_params": list(self.initial_params),
            "final_params": list(self.final_params),
            "metadata": self.metadata,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainRun":
        return cls(
            doc["seed"],
            [EvalPoint(**p) for p in doc["history"]],
            doc.get("initial_params", []),
            doc.get("final_params", []),
            doc.get("metadata", {}),
        )

    def history_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["batch", "loss", "accuracy"])
        for p in self.history:
            writer.writerow([p.batch, repr(p.loss), repr(p.accuracy)])
        return buf.getvalue()


Forward = Callable[[np.ndarray, np.ndarray], np.ndarray]


def evaluate(forward: Forward, params, images, labels, spec: BsocSpec) -> tuple[float, float]:
    """(accuracy in percent, MAE against noiseless bin centres) on a held-out set."""
    outputs = np.asarray(forward(np.asarray(images), np.asarray(params, dtype=float)), dtype=float)
    labels = np.asarray(labels)
    predicted = predict_class(np.clip(outputs, 0.0, 1.0), spec)
    accuracy = 100.0 * float(np.mean(predicted == labels))
    return accuracy, mae_loss(spec.centers[labels], outputs)


def train(
    forward: Forward,
    num_params: int,
    train_images,
    train_labels,
    test_images,
    test_labels,
    config: TrainConfig = TrainConfig(),
    spec: BsocSpec = BsocSpec(),
    run_index: int = 0,
    initial_params=None,
) -> TrainRun:
    """One training run of ``forward(images, params) -> outputs`` with finite-difference Adam.

    The run's generator is seeded with ``(config.seed, run_index)``.  It draws
    the initial parameters (uniform in ``[0, 2 pi)``), then for every batch
    the sample indices (uniform with replacement) and the label noise.
    Evaluation happens before the first batch and after every
    ``eval_every`` batches.
    """
    train_images = np.asarray(train_images)
    train_labels = np.asarray(train_labels)
    if len(train_images) == 0 or len(test_images) == 0:
        raise ValueError("training and test sets must be non-empty")
    spec = BsocSpec(spec.num_classes, config.sigma)
    rng = np.random.default_rng([config.seed, run_index])
    if initial_params is None:
        params = rng.uniform(0.0, 2.0 * np.pi, size=num_params)
    else:
        params = np.asarray(initial_params, dtype=float).copy()
    run = TrainRun(seed=config.seed * 1000 + run_index, initial_params=params.tolist())
    state = AdamState.zeros(num_params)

    def record(batch: int) -> None:
        acc, loss = evaluate(forward, params, test_images, test_labels, spec)
        run.history.append(EvalPoint(batch, loss, acc))

    record(0)
    for batch in range(1, config.num_batches + 1):
        idx = rng.integers(0, len(train_images), size=config.batch_size)
        x = train_images[idx]
        y = label_to_target(train_labels[idx], spec, rng)

        def loss_at(theta, x=x, y=y):
            return mae_loss(y, forward(x, theta))

        grads = finite_diff_gradient(loss_at, params, config.fd_epsilon)
        params, state = adam_step(state, params, grads, config.learning_rate)
        if batch % config.eval_every == 0:
            record(batch)
    run.final_params = params.tolist()
    return run


def aggregate_runs(runs: list[TrainRun]) -> list[dict]:
    """Mean and standard deviation of loss and accuracy per evaluation point."""
    if not runs:
        return []
    batches = [p.batch for p in runs[0].history]
    rows = []
    for i, b in enumerate(batches):
        loss = np.array([r.history[i].loss for r in runs])
        acc = np.array([r.history[i].accuracy for r in runs])
        rows.append(
            {
                "batch": b,
                "loss_mean": float(loss.mean()),
                "loss_std": float(loss.std()),
                "accuracy_mean": float(acc.mean()),
                "accuracy_std": float(acc.std()),
            }
        )
    return rows
