"""MNIST ingestion, angle preprocessing, splits and result persistence.

Images are read from big-endian IDX files (optionally gzip-compressed) and
mapped to angles ``pixel / 255 * (pi - delta)`` so every value lies in
``[0, pi)``.  The dataset directory defaults to ``$QCNN_FORGE_DATA`` and
falls back to ``./data``.
"""

from __future__ import annotations

import datetime as _dt
import gzip
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "IdxError",
    "BadMagicError",
    "TruncatedFileError",
    "CountMismatchError",
    "RawDataset",
    "load_idx",
    "write_idx",
    "TaskSpec",
    "TASKS",
    "resolve_task",
    "PreparedDataset",
    "prepare",
    "pixel_to_angle",
    "ANGLE_DELTA",
    "data_dir",
    "find_idx_pair",
    "load_mnist",
    "save_prepared",
    "load_prepared",
    "make_run_dir",
    "DATA_ENV",
]

DATA_ENV = "QCNN_FORGE_DATA"
IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
ANGLE_DELTA = 1e-6


class IdxError(ValueError):
    """Base class for malformed IDX input."""


class BadMagicError(IdxError):
    """The file does not start with the expected magic number."""


class TruncatedFileError(IdxError):
    """The file holds fewer bytes than its header declares."""


class CountMismatchError(IdxError):
    """Image and label files disagree on the number of items."""


@dataclass(frozen=True)
class RawDataset:
    images: np.ndarray  # (N, 28, 28) uint8
    labels: np.ndarray  # (N,) uint8

    def __len__(self) -> int:
        return len(self.labels)


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def _parse_idx(data: bytes, magic: int, path) -> np.ndarray:
    if len(data) < 4:
        raise TruncatedFileError(f"{path}: missing header")
    (found,) = struct.unpack(">I", data[:4])
    if found != magic:
        raise BadMagicError(f"{path}: wrong magic 0x{found:08x}, expected 0x{magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise TruncatedFileError(f"{path}: truncated dimension records")
    dims = struct.unpack(">" + "I" * ndim, data[4:header])
    size = int(np.prod(dims))
    if len(data) - header < size:
        raise TruncatedFileError(f"{path}: expected {size} data bytes, found {len(data) - header}")
    return np.frombuffer(data, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(images_path, labels_path) -> RawDataset:
    """Parse an IDX image file (magic 0x803) and label file (magic 0x801)."""
    images = _parse_idx(_read_bytes(images_path), IMAGES_MAGIC, images_path)
    labels = _parse_idx(_read_bytes(labels_path), LABELS_MAGIC, labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels")
    return RawDataset(images.copy(), labels.copy())


def _idx_bytes(array: np.ndarray, magic: int) -> bytes:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    return struct.pack(">I", magic) + struct.pack(">" + "I" * array.ndim, *array.shape) + array.tobytes()


def write_idx(images, labels, images_path, labels_path) -> None:
    """Write IDX files; a ``.gz`` suffix selects gzip compression."""
    for arr, magic, path in ((images, IMAGES_MAGIC, images_path), (labels, LABELS_MAGIC, labels_path)):
        payload = _idx_bytes(np.asarray(arr), magic)
        if str(path).endswith(".gz"):
            payload = gzip.compress(payload, mtime=0)
        Path(path).write_bytes(payload)


# ---------------------------------------------------------------------------
# Tasks and preprocessing


@dataclass(frozen=True)
class TaskSpec:
    name: str
    mapping: dict[int, int]

    @property
    def digits(self) -> tuple[int, ...]:
        return tuple(sorted(self.mapping))

    @property
    def num_classes(self) -> int:
        return len(set(self.mapping.values()))


TASKS = {
    "0v1": TaskSpec("ZeroVsOne", {0: 0, 1: 1}),
    "7v8": TaskSpec("SevenVsEight", {7: 0, 8: 1}),
    "gt4": TaskSpec("GreaterThanFour", {d: int(d > 4) for d in range(10)}),
    "0-3": TaskSpec("Digits0to3", {0: 0, 1: 1, 2: 2, 3: 3}),
}
_TASK_ALIASES = {"zerovsone": "0v1", "sevenvseight": "7v8", "greaterthanfour": "gt4", "digits0to3": "0-3"}


def resolve_task(name: str) -> TaskSpec:
    key = _TASK_ALIASES.get(name.lower(), name.lower())
    if key not in TASKS:
        raise KeyError(f"unknown task {name!r}; choose from {sorted(TASKS)}")
    return TASKS[key]


def pixel_to_angle(pixels) -> np.ndarray:
    """``pixel / 255 * (pi - delta)``; 0 maps to 0 and 255 to just below pi."""
    return np.asarray(pixels, dtype=float) / 255.0 * (np.pi - ANGLE_DELTA)


@dataclass(frozen=True)
class PreparedDataset:
    train_images: np.ndarray
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray
    task: str
    pad: str
    seed: int
    metadata: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return resolve_task(self.task).num_classes


def prepare(
    raw: RawDataset,
    task: str | TaskSpec = "0v1",
    pad: str = "pad32",
    seed: int = 0,
    train_fraction: float = 0.8,
    max_train_per_class: int | None = 500,
    max_test_per_class: int | None = 250,
) -> PreparedDataset:
    """Filter, rescale, pad and split.

    The filtered set is shuffled with ``seed`` and split ``train_fraction``
    to train; each split is then capped per class, keeping the earliest
    shuffled examples.
    """
    spec = resolve_task(task) if isinstance(task, str) else task
    task_key = next((k for k, v in TASKS.items() if v == spec), spec.name)
    if pad not in ("none", "pad32"):
        raise ValueError(f"unknown padding {pad!r}")
    keep = np.isin(raw.labels, spec.digits)
    images, digits = raw.images[keep], raw.labels[keep]
    labels = np.array([spec.mapping[int(d)] for d in digits], dtype=np.int64)
    for cls in range(spec.num_classes):
        if not np.any(labels == cls):
            raise ValueError(f"class {cls} of task {spec.name} is empty")
    angles = pixel_to_angle(images)
    if pad == "pad32":
        angles = np.pad(angles, ((0, 0), (2, 2), (2, 2)))
    order = np.random.default_rng(seed).permutation(len(labels))
    cut = int(round(train_fraction * len(order)))
    train_idx, test_idx = order[:cut], order[cut:]

    def cap(idx: np.ndarray, limit: int | None) -> np.ndarray:
        if limit is None:
            return idx
        out = [i for c in range(spec.num_classes) for i in idx[labels[idx] == c][:limit]]
        return np.array(sorted(out, key=lambda i: np.where(idx == i)[0][0]), dtype=np.int64)

    train_idx, test_idx = cap(train_idx, max_train_per_class), cap(test_idx, max_test_per_class)
    meta = {
        "scale": f"pixel/255*(pi-{ANGLE_DELTA})",
        "train_fraction": train_fraction,
        "max_train_per_class": max_train_per_class,
        "max_test_per_class": max_test_per_class,
        "train_per_class": [int(np.sum(labels[train_idx] == c)) for c in range(spec.num_classes)],
        "test_per_class": [int(np.sum(labels[test_idx] == c)) for c in range(spec.num_classes)],
    }
    return PreparedDataset(
        angles[train_idx], labels[train_idx], angles[test_idx], labels[test_idx], task_key, pad, seed, meta
    )


# ---------------------------------------------------------------------------
# Files and directories


def data_dir(override=None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get(DATA_ENV, "data"))


_PAIR_PREFIXES = ("train", "mnist5k", "t10k")


def find_idx_pair(directory) -> tuple[Path, Path]:
    """First (images, labels) pair found under ``directory``."""
    directory = Path(directory)
    for prefix in _PAIR_PREFIXES:
        for suffix in ("", ".gz"):
            img = directory / f"{prefix}-images-idx3-ubyte{suffix}"
            lab = directory / f"{prefix}-labels-idx1-ubyte{suffix}"
            if img.exists() and lab.exists():
                return img, lab
    raise FileNotFoundError(
        f"no MNIST IDX files in {directory}; set {DATA_ENV} or run tools/mnist_subset_to_idx.py"
    )


def load_mnist(directory=None) -> RawDataset:
    return load_idx(*find_idx_pair(data_dir(directory)))


def save_prepared(ds: PreparedDataset, path) -> None:
    """Flat float64 binary (train images, then test images) plus a JSON sidecar."""
    path = Path(path)
    with open(path.with_suffix(".bin"), "wb") as fh:
        fh.write(np.ascontiguousarray(ds.train_images, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ds.test_images, dtype="<f8").tobytes())
    sidecar = {
        "train_shape": list(ds.train_images.shape),
        "test_shape": list(ds.test_images.shape),
        "train_labels": ds.train_labels.tolist(),
        "test_labels": ds.test_labels.tolist(),
        "task": ds.task,
        "pad": ds.pad,
        "seed": ds.seed,
        "metadata": ds.metadata,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar))


def load_prepared(path) -> PreparedDataset:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    flat = np.fromfile(path.with_suffix(".bin"), dtype="<f8")
    n_train = int(np.prod(meta["train_shape"]))
    return PreparedDataset(
        flat[:n_train].reshape(meta["train_shape"]),
        np.array(meta["train_labels"], dtype=np.int64),
        flat[n_train:].reshape(meta["test_shape"]),
        np.array(meta["test_labels"], dtype=np.int64),
        meta["task"],
        meta["pad"],
        meta["seed"],
        meta["metadata"],
    )


def make_run_dir(root="runs", now: _dt.datetime | None = None) -> Path:
    """Create ``root/<timestamp>`` (suffixing ``-1``, ``-2``... on collisions)."""
    stamp = (now or _dt.datetime.now()).strftime("%Y%m%d-%H%M%S")
    root = Path(root)
    path = root / stamp
    n = 0
    while path.exists():
        n += 1
        path = root / f"{stamp}-{n}"
    path.mkdir(parents=True)
    return path
