"""Single-qubit feature embeddings, U3 collapse and fragment encoding.

Inputs are angles in ``[0, pi)``.  Four embeddings are provided:

* QE: one value per qubit, ``Ry(x)``.
* DQE: two values per qubit, ``Rz(x_2) Ry(x_1)``.
* UE: three values per qubit, ``U3(x_1, x_2, x_3)``.
* WUE: three values per qubit, ``U3(theta + w_1 x_1, theta + w_2 x_2, theta + w_3 x_3)``.

Fragment encoding compiles a stack of convolution-like windows into one
single-qubit unitary per output cell.  Inside a window the factors are
written in row-major order with the first element as the left-most factor::

    M = (T_0 E_0) (T_1 E_1) ... (T_{K-1} E_{K-1})

where ``E_p`` is the encoded input (or the previous layer's unitary) at
window position ``p`` and ``T_p`` is the trainable template for that
position.  Right-most factors act first.  Weights are tied across windows of
the same layer, as in a classical convolution kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qsim import GateKind, gate_matrix, u3_matrix

__all__ = [
    "EncodingError",
    "ENCODING_GROUP",
    "encode_qe",
    "encode_dqe",
    "encode_ue",
    "encode_wue",
    "encoding_matrices",
    "CollapsedU3",
    "collapse_u3",
    "collapse_matrices",
    "FragmentLayer",
    "FragmentSpec",
    "fragment_matrices",
    "fragment_encode",
    "memory_bound",
    "memory_liveness_oracle",
]


class EncodingError(ValueError):
    """Raised for out-of-domain inputs or mismatched shapes."""


# Number of input values consumed by one encoding gate.
ENCODING_GROUP = {"QE": 1, "DQE": 2, "UE": 3, "WUE": 3}


def _check_domain(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x >= np.pi):
        raise EncodingError("encoding inputs must lie in [0, pi)")
    return x


def _pad(x: np.ndarray, group: int) -> np.ndarray:
    """Zero-fill the last axis to a multiple of ``group`` and split it into groups."""
    n = x.shape[-1]
    size = -(-n // group) * group
    if size != n:
        x = np.concatenate([x, np.zeros(x.shape[:-1] + (size - n,))], axis=-1)
    return x.reshape(x.shape[:-1] + (size // group, group))


def _ry(x):
    return gate_matrix(GateKind.RY, np.asarray(x, dtype=float)[..., None])


def _rz(x):
    return gate_matrix(GateKind.RZ, np.asarray(x, dtype=float)[..., None])


def _qe(groups):
    return _ry(groups[..., 0])


def _dqe(groups):
    return _rz(groups[..., 1]) @ _ry(groups[..., 0])


def _ue(groups):
    return u3_matrix(groups[..., 0], groups[..., 1], groups[..., 2])


def _wue(groups, theta, weights):
    args = theta + weights * groups
    return u3_matrix(args[..., 0], args[..., 1], args[..., 2])


def encode_qe(x) -> np.ndarray:
    """``Ry(x_j)`` for every input value; returns an array of shape (N, 2, 2)."""
    x = _check_domain(np.atleast_1d(x))
    return _qe(_pad(x, 1))


def encode_dqe(x) -> np.ndarray:
    """``Rz(x_{2j+1}) Ry(x_{2j})`` per pair; an odd length is padded with a zero."""
    x = _check_domain(np.atleast_1d(x))
    return _dqe(_pad(x, 2))


def encode_ue(x) -> np.ndarray:
    """``U3(x_{3j}, x_{3j+1}, x_{3j+2})`` per triple, zero-filled at the end."""
    x = _check_domain(np.atleast_1d(x))
    return _ue(_pad(x, 3))


def encode_wue(x, theta: float, weights) -> np.ndarray:
    """``U3(theta + w_1 x_1, theta + w_2 x_2, theta + w_3 x_3)`` per triple.

    ``weights`` has one row of three values per gate (shape ``(G, 3)`` or a
    flat vector of length ``3 G``).
    """
    x = _check_domain(np.atleast_1d(x))
    groups = _pad(x, 3)
    weights = np.asarray(weights, dtype=float)
    if weights.size != groups.shape[-2] * 3:
        raise EncodingError(f"WUE needs {groups.shape[-2] * 3} weights, got {weights.size}")
    return _wue(groups, float(theta), weights.reshape(groups.shape[-2], 3))


def encoding_matrices(kind: str, groups: np.ndarray, theta: float = 0.0, weights=None) -> np.ndarray:
    """Encoding gates for pre-grouped inputs of shape ``(..., g)`` (no domain check)."""
    kind = kind.upper()
    if kind == "QE":
        return _qe(groups)
    if kind == "DQE":
        return _dqe(groups)
    if kind == "UE":
        return _ue(groups)
    if kind == "WUE":
        return _wue(groups, theta, np.zeros(3) if weights is None else np.asarray(weights))
    raise EncodingError(f"unknown encoding {kind!r}")


# ---------------------------------------------------------------------------
# Collapse of single-qubit products


@dataclass(frozen=True)
class CollapsedU3:
    """``exp(i global_phase) U3(theta, phi, lam)``."""

    theta: float
    phi: float
    lam: float
    global_phase: float = 0.0

    def matrix(self) -> np.ndarray:
        return np.exp(1j * self.global_phase) * u3_matrix(self.theta, self.phi, self.lam)


def _wrap(angle):
    return np.angle(np.exp(1j * np.asarray(angle)))


def collapse_matrices(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized U3 angles ``(theta, phi, lam, phase)`` for matrices of shape (..., 2, 2).

    With ``M = e^{i a} U3(t, p, l)`` the entries are ``M00 = e^{ia} cos(t/2)``,
    ``M10 = e^{i(a+p)} sin(t/2)``, ``M01 = -e^{i(a+l)} sin(t/2)`` and
    ``M11 = e^{i(a+p+l)} cos(t/2)``.  Angles are read from the entries with
    the larger modulus so that the reconstruction stays accurate near
    ``t = 0`` and ``t = pi``.
    """
    m = np.asarray(m, dtype=complex)
    m00, m01, m10, m11 = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    c, s = np.abs(m00), np.abs(m10)
    theta = 2.0 * np.arctan2(s, c)
    alpha = np.angle(m00)
    phi = np.angle(m10) - alpha
    lam = np.where(c >= s, np.angle(m11) - alpha - phi, np.angle(-m01) - alpha)
    return theta, _wrap(phi), _wrap(lam), _wrap(alpha)


def collapse_u3(seq: Sequence[np.ndarray]) -> CollapsedU3:
    """Collapse gates applied in list order (``seq[0]`` first) into one U3.

    The product is ``seq[-1] ... seq[1] seq[0]``.
    """
    if len(seq) == 0:
        raise EncodingError("cannot collapse an empty gate sequence")
    prod = np.eye(2, dtype=complex)
    for g in seq:
        g = np.asarray(g, dtype=complex)
        if g.shape != (2, 2):
            raise EncodingError(f"expected 2x2 matrices, got shape {g.shape}")
        prod = g @ prod
    t, p, l, a = collapse_matrices(prod)
    return CollapsedU3(float(t), float(p), float(l), float(a))


# ---------------------------------------------------------------------------
# Fragment encoding


@dataclass(frozen=True)
class FragmentLayer:
    """One window layer: ``kernel`` rows and columns, ``stride`` and the trainable template.

    ``gate_template`` lists single-qubit gates applied after each input in
    order (first entry acts first).
    """

    kernel: tuple[int, int] = (2, 2)
    stride: int = 2
    gate_template: tuple[GateKind, ...] = (GateKind.U3,)

    def __post_init__(self):
        kernel = tuple(int(k) for k in self.kernel)
        template = tuple(g if isinstance(g, GateKind) else GateKind.parse(g) for g in self.gate_template)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "gate_template", template)
        if len(kernel) != 2 or min(kernel) < 1 or self.stride < 1:
            raise EncodingError(f"invalid kernel {kernel} or stride {self.stride}")
        if any(g.arity != 1 for g in template):
            raise EncodingError("fragment templates take single-qubit gates only")
        if sum(g.num_params for g in template) == 0:
            raise EncodingError("every input gate must be followed by a trainable gate")

    @property
    def window(self) -> int:
        return self.kernel[0] * self.kernel[1]

    @property
    def params_per_position(self) -> int:
        return sum(g.num_params for g in self.gate_template)

    def output_shape(self, rows: int, cols: int) -> tuple[int, int]:
        kr, kc = self.kernel
        if rows < kr or cols < kc or (rows - kr) % self.stride or (cols - kc) % self.stride:
            raise EncodingError(f"a {kr}x{kc}/{self.stride} window does not tile a {rows}x{cols} grid")
        return (rows - kr) // self.stride + 1, (cols - kc) // self.stride + 1

    def to_dict(self) -> dict:
        return {
            "kernel": list(self.kernel),
            "stride": self.stride,
            "gate_template": [g.label for g in self.gate_template],
        }


@dataclass(frozen=True)
class FragmentSpec:
    """Layer cascade plus the base encoding of the first layer.

    Parameter layout: for every layer in order, for every window position in
    order, the template's angles; then, for WUE only, the shared angle
    ``theta`` followed by three weights per first-layer input position.
    """

    layers: tuple[FragmentLayer, ...]
    base_encoding: str = "QE"
    input_shape: tuple[int, int] = field(default=(32, 32))

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "base_encoding", self.base_encoding.upper())
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        if self.base_encoding not in ENCODING_GROUP:
            raise EncodingError(f"unknown base encoding {self.base_encoding!r}")
        if not self.layers:
            raise EncodingError("a fragment encoding needs at least one layer")
        self.output_shape  # validates the cascade

    @property
    def group(self) -> int:
        return ENCODING_GROUP[self.base_encoding]

    def positions(self, index: int) -> int:
        """Number of factors per window in layer ``index``."""
        window = self.layers[index].window
        return -(-window // self.group) if index == 0 else window

    @property
    def output_shape(self) -> tuple[int, int]:
        rows, cols = self.input_shape
        for layer in self.layers:
            rows, cols = layer.output_shape(rows, cols)
        return rows, cols

    @property
    def num_outputs(self) -> int:
        r, c = self.output_shape
        return r * c

    @property
    def num_layer_params(self) -> int:
        return sum(self.positions(i) * layer.params_per_position for i, layer in enumerate(self.layers))

    @property
    def num_params(self) -> int:
        extra = 1 + 3 * self.positions(0) if self.base_encoding == "WUE" else 0
        return self.num_layer_params + extra

    def to_dict(self) -> dict:
        return {
            "base_encoding": self.base_encoding,
            "input_shape": list(self.input_shape),
            "layers": [layer.to_dict() for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FragmentSpec":
        layers = tuple(
            FragmentLayer(tuple(d["kernel"]), int(d["stride"]), tuple(d["gate_template"])) for d in doc["layers"]
        )
        return cls(layers, doc.get("base_encoding", "QE"), tuple(doc.get("input_shape", (32, 32))))


def _template_matrices(layer: FragmentLayer, params: np.ndarray) -> np.ndarray:
    """Matrices of shape (positions, 2, 2) for the layer's tied templates."""
    per = layer.params_per_position
    params = params.reshape(-1, per)
    out = np.broadcast_to(np.eye(2, dtype=complex), (params.shape[0], 2, 2)).copy()
    col = 0
    for kind in layer.gate_template:
        m = gate_matrix(kind, params[:, col : col + kind.num_params]) if kind.num_params else gate_matrix(kind)
        col += kind.num_params
        out = m @ out
    return out


def _window_slices(layer: FragmentLayer, out_rows: int, out_cols: int):
    kr, kc = layer.kernel
    s = layer.stride
    for a in range(kr):
        for b in range(kc):
            yield (slice(a, a + s * (out_rows - 1) + 1, s), slice(b, b + s * (out_cols - 1) + 1, s))


def fragment_matrices(images, spec: FragmentSpec, weights) -> np.ndarray:
    """Compiled unitaries for a batch of images.

    ``images`` has shape ``(..., H, W)`` with angles in ``[0, pi)``; the result
    has shape ``(..., R, C, 2, 2)`` for the spec's output grid.
    """
    images = np.asarray(images, dtype=float)
    if images.shape[-2:] != spec.input_shape:
        raise EncodingError(f"image shape {images.shape[-2:]} does not match {spec.input_shape}")
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.size != spec.num_params:
        raise EncodingError(f"fragment encoding needs {spec.num_params} weights, got {weights.size}")
    _check_domain(images)
    batch = images.shape[:-2]
    theta, wue_weights = 0.0, None
    if spec.base_encoding == "WUE":
        extra = weights[spec.num_layer_params :]
        theta, wue_weights = extra[0], extra[1:].reshape(-1, 3)

    offset = 0
    current = None
    rows, cols = spec.input_shape
    for index, layer in enumerate(spec.layers):
        out_rows, out_cols = layer.output_shape(rows, cols)
        npos = spec.positions(index)
        count = npos * layer.params_per_position
        templates = _template_matrices(layer, weights[offset : offset + count])
        offset += count
        windows = list(_window_slices(layer, out_rows, out_cols))
        if index == 0:
            values = np.stack([images[..., r, c] for r, c in windows], axis=-1)
            groups = _pad(values, spec.group)
            factors = []
            for p in range(npos):
                w = None if wue_weights is None else wue_weights[p]
                factors.append(encoding_matrices(spec.base_encoding, groups[..., p, :], theta, w))
        else:
            factors = [current[..., r, c, :, :] for r, c in windows]
        prod = None
        for p in range(npos):
            term = templates[p] @ factors[p]
            prod = term if prod is None else prod @ term
        current = prod
        rows, cols = out_rows, out_cols
    assert current.shape[:-4] == batch
    return current


def fragment_encode(image, spec: FragmentSpec, weights) -> list[CollapsedU3]:
    """One collapsed U3 per output qubit, row-major over the output grid."""
    mats = fragment_matrices(image, spec, weights)
    if mats.ndim != 4:
        raise EncodingError("fragment_encode takes a single 2D image")
    t, p, l, a = collapse_matrices(mats.reshape(-1, 2, 2))
    return [CollapsedU3(float(t[i]), float(p[i]), float(l[i]), float(a[i])) for i in range(len(t))]


# ---------------------------------------------------------------------------
# Classical memory bound of streamed convolution and pooling


def _log_exact(n: int, m: int) -> int:
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if m == 1:
        if n == 1:
            return 0
        raise ValueError("n must be a power of m")
    c, v = 0, 1
    while v < n:
        v *= m
        c += 1
    if v != n:
        raise ValueError(f"{n} is not a power of {m}")
    return c


def memory_bound(n: int, k: int, m: int) -> int:
    """Peak number of stored values, ``1 + (k^2 + m^2 - 2) log_m(n)``.

    Counts values held while streaming an ``n x n`` input through alternating
    ``k x k`` stride-1 convolutions and ``m x m`` stride-``m`` poolings down to
    a single output.
    """
    if k < 1:
        raise ValueError("k must be positive")
    return 1 + (k * k + m * m - 2) * _log_exact(n, m)


def memory_liveness_oracle(n: int, k: int, m: int) -> int:
    """Brute-force peak of simultaneously live values for the same dataflow.

    The final output is evaluated depth-first.  Each pooling output needs
    ``m^2`` convolution outputs, each convolution output needs ``k^2`` values
    of the previous pooling level, and level 0 values are loaded from the
    input.  A value stays live from the moment it is produced until its
    consumer has been computed; the consumer's result then replaces its
    inputs.  The returned number is the largest live count seen.
    """
    levels = _log_exact(n, m)
    if k < 1:
        raise ValueError("k must be positive")
    live = 0
    peak = 0
    # Explicit stack of (level, kind, remaining inputs) frames.
    # kind "pool" consumes m*m "conv" values, "conv" consumes k*k "pool" values
    # of the level below, and level 0 pool values are raw loads.
    stack = [[levels, "pool", m * m, 0]]
    if levels == 0:
        return 1
    while stack:
        frame = stack[-1]
        level, kind, remaining, produced = frame
        if remaining == 0:
            stack.pop()
            live -= produced
            live += 1
            peak = max(peak, live)
            if stack:
                stack[-1][2] -= 1
                stack[-1][3] += 1
            continue
        if kind == "pool":
            stack.append([level, "conv", k * k, 0])
        elif level - 1 == 0:
            live += 1
            peak = max(peak, live)
            frame[2] -= 1
            frame[3] += 1
        else:
            stack.append([level - 1, "pool", m * m, 0])
    return peak
