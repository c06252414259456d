"""Hybrid and regular QCNN forward passes.

Hybrid QCNN
    Every receptive field is QE-encoded on fresh qubits, processed by the
    convolution circuit and measured on its last qubit.  The measured
    probability ``p`` becomes the angle ``p * pi`` of the next layer's input.
    Type I applies a ``k``-qubit circuit to every row of the window and then
    once more to the column of row results.  Type II applies a ``k^2``-qubit
    circuit to the whole window.

Regular QCNN
    A fragment encoding prepares one qubit per output cell, then a stack of
    pooling, interpolation and convolution layers acts on the shrinking set of
    active qubits, and the last active qubit is measured once.

Qubits of a grid are numbered row-major.  Pooling uses
``(X (x) I) CRX(theta_0) (X (x) I) CRZ(theta_1)`` with the discarded qubit
as control and the survivor as target.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .encodings import FragmentLayer, FragmentSpec, fragment_matrices
from .library import baseline_circuit
from .metrics import qe_product_states
from .qsim import (
    CircuitError,
    GateKind,
    ParameterizedCircuit,
    apply_matrix,
    circuit_from_dict,
    circuit_to_dict,
    gate_matrix,
    last_qubit_prob1,
    run_circuit,
    u3_matrix,
)

__all__ = [
    "ModelError",
    "pooling_unitary",
    "POOLING_CIRCUIT",
    "pool_2x2_pairs",
    "interpolation_pairs",
    "apply_pooling",
    "apply_pooling_layer",
    "apply_interpolation",
    "HybridLayer",
    "HybridModel",
    "hybrid_forward",
    "StackLayer",
    "RegularModel",
    "regular_forward",
    "regular_forward_dense",
    "grid_search_menu",
    "named_model",
    "NAMED_MODELS",
    "model_to_dict",
    "model_from_dict",
    "model_to_json",
    "model_from_json",
]


class ModelError(ValueError):
    """Raised for inconsistent model layouts or input shapes."""


_X = gate_matrix(GateKind.X)
_XI = np.kron(_X, np.eye(2))


def pooling_unitary(theta0, theta1) -> np.ndarray:
    """``(X (x) I) CRX(theta0) (X (x) I) CRZ(theta1)``; first factor on the control.

    The target receives ``Rz(theta1)`` when the control is ``|1>`` and
    ``Rx(theta0)`` when it is ``|0>``.  Broadcasts over batched angles.
    """
    crx = gate_matrix(GateKind.CRX, np.asarray(theta0, dtype=float)[..., None])
    crz = gate_matrix(GateKind.CRZ, np.asarray(theta1, dtype=float)[..., None])
    return _XI @ crx @ _XI @ crz


# The same unitary as a two-qubit circuit (qubit 0 is the control).
POOLING_CIRCUIT = ParameterizedCircuit.build(
    2, [("CRZ", (0, 1), 1), ("X", 0), ("CRX", (0, 1), 0), ("X", 0)]
)


def pool_2x2_pairs(grid: np.ndarray) -> list[tuple[int, int]]:
    """(discarded, survivor) pairs folding every 2x2 block into its top-left cell.

    Inside a block the order is bottom-right into bottom-left, top-right into
    top-left, then bottom-left into top-left.
    """
    grid = np.asarray(grid)
    rows, cols = grid.shape
    if rows % 2 or cols % 2:
        raise ModelError(f"2x2 pooling needs even grid dimensions, got {rows}x{cols}")
    pairs = []
    for r in range(0, rows, 2):
        for c in range(0, cols, 2):
            tl, tr, bl, br = grid[r, c], grid[r, c + 1], grid[r + 1, c], grid[r + 1, c + 1]
            pairs += [(int(br), int(bl)), (int(tr), int(tl)), (int(bl), int(tl))]
    return pairs


def interpolation_pairs(grid: np.ndarray) -> list[tuple[int, int]]:
    """(discarded, survivor) pairs folding the last row and column inwards.

    The corner goes first into its left neighbour, then every other cell of
    the last column into its left neighbour, then every cell of the last row
    into the cell above.
    """
    grid = np.asarray(grid)
    rows, cols = grid.shape
    if rows < 2 or cols < 2:
        raise ModelError(f"interpolation needs at least a 2x2 grid, got {rows}x{cols}")
    pairs = [(int(grid[rows - 1, cols - 1]), int(grid[rows - 1, cols - 2]))]
    pairs += [(int(grid[r, cols - 1]), int(grid[r, cols - 2])) for r in range(rows - 1)]
    pairs += [(int(grid[rows - 1, c]), int(grid[rows - 2, c])) for c in range(cols - 1)]
    return pairs


def _grid(rows: int, cols: int) -> np.ndarray:
    return np.arange(rows * cols).reshape(rows, cols)


def apply_pooling(state: np.ndarray, control: int, target: int, params) -> np.ndarray:
    """Apply the pooling unitary with ``control`` folded into ``target``."""
    theta0, theta1 = np.asarray(params, dtype=float)[..., 0], np.asarray(params, dtype=float)[..., 1]
    return apply_matrix(state, pooling_unitary(theta0, theta1), (control, target))


def _check_grid(state: np.ndarray, rows: int, cols: int) -> None:
    n = state.shape[-1].bit_length() - 1
    if rows * cols != n:
        raise ModelError(f"a {rows}x{cols} grid needs {rows * cols} qubits, the state has {n}")


def apply_pooling_layer(state: np.ndarray, grid_rows: int, grid_cols: int, params) -> np.ndarray:
    """2x2 pooling over a full ``grid_rows x grid_cols`` qubit grid; survivors stay in place."""
    state = np.asarray(state, dtype=complex)
    _check_grid(state, grid_rows, grid_cols)
    for control, target in pool_2x2_pairs(_grid(grid_rows, grid_cols)):
        state = apply_pooling(state, control, target, params)
    return state


def apply_interpolation(state: np.ndarray, grid_rows: int, grid_cols: int, params) -> np.ndarray:
    """Interpolation over a full grid; the logical grid shrinks by one row and one column.

    Folded qubits stay in the state vector and are never touched again.
    """
    state = np.asarray(state, dtype=complex)
    _check_grid(state, grid_rows, grid_cols)
    for control, target in interpolation_pairs(_grid(grid_rows, grid_cols)):
        state = apply_pooling(state, control, target, params)
    return state


# ---------------------------------------------------------------------------
# Hybrid QCNN


@dataclass(frozen=True)
class HybridLayer:
    """Convolution with a ``kernel x kernel`` window, optionally followed by 2x2 pooling."""

    kernel: int
    stride: int
    circuit: ParameterizedCircuit
    pooling: bool = False
    circuit_ref: dict | None = field(default=None, compare=False)

    @property
    def num_params(self) -> int:
        return self.circuit.num_params + (2 if self.pooling else 0)


# Literal 4-qubit pooling circuit: (0 -> 1), (2 -> 3), then (1 -> 3); qubit 3 is read.
_HYBRID_POOL_PAIRS = ((0, 1), (2, 3), (1, 3))


@dataclass(frozen=True)
class HybridModel:
    variant: str
    layers: tuple[HybridLayer, ...]
    name: str = "hybrid"

    def __post_init__(self):
        variant = self.variant.upper().replace("TYPE", "").strip()
        if variant not in ("I", "II"):
            raise ModelError(f"unknown hybrid variant {self.variant!r}")
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "layers", tuple(self.layers))
        for layer in self.layers:
            need = layer.kernel if variant == "I" else layer.kernel**2
            if layer.circuit.num_qubits != need:
                raise ModelError(
                    f"Type {variant} with a {layer.kernel}x{layer.kernel} kernel needs a {need}-qubit circuit, "
                    f"got {layer.circuit.num_qubits}"
                )

    @property
    def num_params(self) -> int:
        return sum(layer.num_params for layer in self.layers)

    def output_shape(self, rows: int, cols: int) -> tuple[int, int]:
        for layer in self.layers:
            rows, cols = _conv_shape(rows, cols, layer.kernel, layer.stride)
            if layer.pooling:
                rows, cols = _conv_shape(rows, cols, 2, 2)
        return rows, cols


def _conv_shape(rows: int, cols: int, k: int, s: int) -> tuple[int, int]:
    if rows < k or cols < k or (rows - k) % s or (cols - k) % s:
        raise ModelError(f"a {k}x{k}/{s} window does not tile a {rows}x{cols} grid")
    return (rows - k) // s + 1, (cols - k) // s + 1


def _windows(maps: np.ndarray, k: int, s: int) -> np.ndarray:
    """Row-major window values of shape (..., R, C, k*k)."""
    rows, cols = _conv_shape(maps.shape[-2], maps.shape[-1], k, s)
    parts = [
        maps[..., a : a + s * (rows - 1) + 1 : s, b : b + s * (cols - 1) + 1 : s]
        for a in range(k)
        for b in range(k)
    ]
    return np.stack(parts, axis=-1)


def _measure_after(circuit: ParameterizedCircuit, angles: np.ndarray, params: np.ndarray) -> np.ndarray:
    """QE-encode ``angles`` (..., q), run the circuit, return P(last qubit = 1)."""
    shape = angles.shape[:-1]
    states = qe_product_states(angles.reshape(-1, angles.shape[-1]))
    out = run_circuit(circuit, params, states)
    return np.asarray(last_qubit_prob1(out, circuit.num_qubits - 1)).reshape(shape)


def _hybrid_pool(maps: np.ndarray, params: np.ndarray) -> np.ndarray:
    values = _windows(maps * np.pi, 2, 2)
    shape = values.shape[:-1]
    state = qe_product_states(values.reshape(-1, 4))
    u = pooling_unitary(params[0], params[1])
    for control, target in _HYBRID_POOL_PAIRS:
        state = apply_matrix(state, u, (control, target))
    return np.asarray(last_qubit_prob1(state, 3)).reshape(shape)


def hybrid_forward(model: HybridModel, image, params) -> np.ndarray | float:
    """Network output in [0, 1] for an image (or a batch of shape (..., H, W)) of angles in [0, pi)."""
    image = np.asarray(image, dtype=float)
    params = np.asarray(params, dtype=float).ravel()
    if params.size != model.num_params:
        raise ModelError(f"model needs {model.num_params} parameters, got {params.size}")
    if image.ndim < 2:
        raise ModelError("hybrid_forward expects a 2D image")
    if model.output_shape(*image.shape[-2:]) != (1, 1):
        raise ModelError(f"layers do not reduce a {image.shape[-2:]} image to a single output")
    angles = image
    offset = 0
    maps = None
    for layer in model.layers:
        theta = params[offset : offset + layer.circuit.num_params]
        offset += layer.circuit.num_params
        values = _windows(angles, layer.kernel, layer.stride)
        if model.variant == "II" or layer.kernel == 1:
            maps = _measure_after(layer.circuit, values, theta)
        else:
            k = layer.kernel
            rows = values.reshape(values.shape[:-1] + (k, k))
            row_results = _measure_after(layer.circuit, rows, theta)
            maps = _measure_after(layer.circuit, row_results * np.pi, theta)
        if layer.pooling:
            maps = _hybrid_pool(maps, params[offset : offset + 2])
            offset += 2
        angles = maps * np.pi
    out = maps[..., 0, 0]
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Regular QCNN


_STACK_KINDS = ("pool", "interp", "conv", "u3")


@dataclass(frozen=True)
class StackLayer:
    """One regular-QCNN layer.

    ``pool``: 2x2 pooling with two shared angles.  ``interp``: interpolation
    with two shared angles.  ``u3``: a 1x1 convolution, one U3 with shared
    angles on every active qubit.  ``conv``: ``circuit`` on all active qubits
    in row-major order.
    """

    kind: str
    circuit: ParameterizedCircuit | None = None
    circuit_ref: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in _STACK_KINDS:
            raise ModelError(f"unknown layer kind {self.kind!r}")
        if (self.kind == "conv") != (self.circuit is not None):
            raise ModelError("exactly the conv layer carries a circuit")

    @property
    def num_params(self) -> int:
        if self.kind in ("pool", "interp"):
            return 2
        if self.kind == "u3":
            return 3
        return self.circuit.num_params

    @property
    def label(self) -> str:
        if self.kind == "conv":
            ref = self.circuit_ref or {}
            return ref.get("id", f"conv{self.circuit.num_qubits}")
        return {"pool": "Pool", "interp": "Interpol", "u3": "U3"}[self.kind]


@dataclass(frozen=True)
class RegularModel:
    fragment: FragmentSpec
    stack: tuple[StackLayer, ...]
    name: str = "regular"

    def __post_init__(self):
        object.__setattr__(self, "stack", tuple(self.stack))
        self.final_grid()

    @property
    def num_qubits(self) -> int:
        return self.fragment.num_outputs

    @property
    def num_params(self) -> int:
        return self.fragment.num_params + sum(layer.num_params for layer in self.stack)

    def final_grid(self) -> np.ndarray:
        """Active qubit grid after the whole stack (validates the bookkeeping)."""
        grid = _grid(*self.fragment.output_shape)
        for layer in self.stack:
            grid = _next_grid(grid, layer)
        return grid

    @property
    def readout_qubit(self) -> int:
        return int(self.final_grid().ravel()[-1])


def _next_grid(grid: np.ndarray, layer: StackLayer) -> np.ndarray:
    if layer.kind == "pool":
        pool_2x2_pairs(grid)
        return grid[::2, ::2]
    if layer.kind == "interp":
        interpolation_pairs(grid)
        return grid[:-1, :-1]
    if layer.kind == "conv" and layer.circuit.num_qubits != grid.size:
        raise ModelError(f"{layer.circuit.num_qubits}-qubit circuit on {grid.size} active qubits")
    return grid


def _layer_ops(model: RegularModel, weights: np.ndarray):
    """Yield (matrix, qubits) or ("discard", qubit) operations of the layer stack."""
    offset = model.fragment.num_params
    grid = _grid(*model.fragment.output_shape)
    for layer in model.stack:
        theta = weights[offset : offset + layer.num_params]
        offset += layer.num_params
        if layer.kind in ("pool", "interp"):
            pairs = pool_2x2_pairs(grid) if layer.kind == "pool" else interpolation_pairs(grid)
            u = pooling_unitary(theta[0], theta[1])
            for control, target in pairs:
                yield u, (control, target)
                yield "discard", control
        elif layer.kind == "u3":
            u = u3_matrix(theta[0], theta[1], theta[2])
            for q in grid.ravel():
                yield u, (int(q),)
        else:
            qubits = grid.ravel()
            for g in layer.circuit.gates:
                if g.kind.num_params:
                    m = gate_matrix(g.kind, theta[list(g.param_slots)])
                else:
                    m = gate_matrix(g.kind)
                yield m, tuple(int(qubits[q]) for q in g.qubits)
        grid = _next_grid(grid, layer)


def _prepare(model: RegularModel, images: np.ndarray, weights: np.ndarray) -> np.ndarray:
    mats = fragment_matrices(images, model.fragment, weights[: model.fragment.num_params])
    return mats.reshape(mats.shape[:-4] + (-1, 2, 2))[..., 0]  # columns U|0>, shape (..., n, 2)


def regular_forward_dense(model: RegularModel, image, weights) -> np.ndarray | float:
    """Reference forward pass on the full state vector of all fragment qubits."""
    weights = _check_weights(model, weights)
    singles = _prepare(model, np.asarray(image, dtype=float), weights)
    n = singles.shape[-2]
    state = singles[..., n - 1, :]
    for j in range(n - 2, -1, -1):
        state = (state[..., :, None] * singles[..., j, None, :]).reshape(singles.shape[:-2] + (-1,))
    for op, qubits in _layer_ops(model, weights):
        if isinstance(op, str):
            continue
        state = apply_matrix(state, op, qubits)
    return last_qubit_prob1(state, model.readout_qubit)


def _check_weights(model: RegularModel, weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.size != model.num_params:
        raise ModelError(f"model needs {model.num_params} weights, got {weights.size}")
    return weights


class _Register:
    """Qubits held jointly, either as a pure state or as a density matrix of the active ones.

    Local qubit ``j`` (position in ``qubits``) is bit ``j`` of the local index.
    A pure register may hold discarded qubits; a density matrix never does.
    """

    def __init__(self, qubits, data, pure=True, active=None):
        self.qubits = list(qubits)
        self.data = data
        self.pure = pure
        self.active = set(self.qubits) if active is None else set(active)

    def to_density(self) -> "_Register":
        if not self.pure:
            return self
        k = len(self.qubits)
        act = [j for j, q in enumerate(self.qubits) if q in self.active]
        rest = [j for j, q in enumerate(self.qubits) if q not in self.active]
        batch = self.data.shape[:-1]
        nb = len(batch)
        psi = self.data.reshape(batch + (2,) * k)
        order = [nb + k - 1 - j for j in reversed(act)] + [nb + k - 1 - j for j in reversed(rest)]
        psi = np.transpose(psi, list(range(nb)) + order).reshape(batch + (2 ** len(act), 2 ** len(rest)))
        rho = psi @ np.conj(np.swapaxes(psi, -1, -2))
        return _Register([self.qubits[j] for j in act], rho, pure=False)

    def apply(self, matrix: np.ndarray, qubits: Sequence[int]) -> None:
        local = [self.qubits.index(q) for q in qubits]
        if self.pure:
            self.data = apply_matrix(self.data, matrix, local)
            return
        a = len(self.qubits)
        batch = self.data.shape[:-2]
        flat = self.data.reshape(batch + (4**a,))
        flat = apply_matrix(flat, matrix, [a + j for j in local])
        flat = apply_matrix(flat, np.conj(matrix), local)
        self.data = flat.reshape(batch + (2**a, 2**a))

    def prob1(self, qubit: int) -> np.ndarray:
        j = self.qubits.index(qubit)
        if self.pure:
            return np.asarray(last_qubit_prob1(self.data, j))
        diag = np.real(np.diagonal(self.data, axis1=-2, axis2=-1))
        mask = (np.arange(diag.shape[-1]) >> j) & 1
        return np.clip(np.sum(diag * mask, axis=-1), 0.0, 1.0)

    def cost(self) -> tuple[int, int]:
        return len(self.qubits), len(self.active)


def _merge(parts: list[_Register]) -> _Register:
    total = sum(len(p.qubits) for p in parts)
    active = sum(len(p.active) for p in parts)
    use_pure = all(p.pure for p in parts) and 2**total <= 4**active
    parts = parts if use_pure else [p.to_density() for p in parts]
    reg = parts[0]
    for nxt in parts[1:]:
        if use_pure:
            data = (nxt.data[..., :, None] * reg.data[..., None, :]).reshape(reg.data.shape[:-1] + (-1,))
            reg = _Register(reg.qubits + nxt.qubits, data, True, reg.active | nxt.active)
        else:
            d = reg.data.shape[-1] * nxt.data.shape[-1]
            data = np.einsum("...ij,...kl->...ikjl", nxt.data, reg.data).reshape(reg.data.shape[:-2] + (d, d))
            reg = _Register(reg.qubits + nxt.qubits, data, False)
    return reg


def regular_forward(model: RegularModel, image, weights) -> np.ndarray | float:
    """Exact P(readout qubit = 1) for an image or a batch of shape (..., H, W).

    Qubits are simulated in independent registers that merge only when a gate
    couples them.  A register whose qubits were mostly discarded switches to a
    density matrix of its active qubits when that is smaller; the result is
    identical to the full state-vector pass.
    """
    weights = _check_weights(model, weights)
    image = np.asarray(image, dtype=float)
    singles = _prepare(model, image, weights)
    batch = singles.shape[:-2]
    flat = singles.reshape((-1,) + singles.shape[-2:])
    owner: dict[int, _Register] = {}
    for q in range(flat.shape[1]):
        owner[q] = _Register([q], flat[:, q, :])
    for op, qubits in _layer_ops(model, weights):
        if isinstance(op, str):
            reg = owner[qubits]
            reg.active.discard(qubits)
            if not reg.pure:
                reg = _trace_out(reg, qubits)
                for q in reg.qubits:
                    owner[q] = reg
            continue
        regs = []
        for q in qubits:
            if all(owner[q] is not r for r in regs):
                regs.append(owner[q])
        reg = regs[0] if len(regs) == 1 else _merge(regs)
        for q in reg.qubits:
            owner[q] = reg
        reg.apply(op, qubits)
    out = owner[model.readout_qubit].prob1(model.readout_qubit).reshape(batch)
    return float(out) if out.ndim == 0 else out


def _trace_out(reg: _Register, qubit: int) -> _Register:
    """Partial trace of one qubit from a density-matrix register."""
    a = len(reg.qubits)
    j = reg.qubits.index(qubit)
    batch = reg.data.shape[:-2]
    nb = len(batch)
    rho = reg.data.reshape(batch + (2,) * (2 * a))
    row_axis = nb + a - 1 - j
    col_axis = nb + 2 * a - 1 - j
    rho = np.trace(rho, axis1=row_axis, axis2=col_axis)
    d = 2 ** (a - 1)
    qubits = [q for q in reg.qubits if q != qubit]
    return _Register(qubits, rho.reshape(batch + (d, d)), pure=False)


# ---------------------------------------------------------------------------
# Grid-search menu and named models


_PIPELINES = {
    1: ("Rx-Ry-Rz-Rx-Ry", "Rx-U3-Ry-U3-Rz", "U3-U3-U3-U3-U3"),
    4: ("Rx-Ry-Rz-Rx", "Rx-U3-Ry-U3", "U3-U3-U3-U3"),
    16: ("Rx-Ry-Rz", "Rx-U3-Ry", "U3-U3-U3"),
}
_CONV_IDS = ("C1", "C2", "C3", "C4", "C5", "AS")


def _fragment(pipeline: str) -> FragmentSpec:
    layers = tuple(FragmentLayer((2, 2), 2, (GateKind.parse(g),)) for g in pipeline.split("-"))
    return FragmentSpec(layers, "QE", (32, 32))


def _conv(circuit_id: str, qubits: int) -> StackLayer:
    ref = {"id": circuit_id, "qubits": qubits, "arch": "regular"}
    return StackLayer("conv", baseline_circuit(circuit_id, qubits, "regular"), ref)


def _stacks(num_qubits: int) -> list[tuple[str, tuple[StackLayer, ...]]]:
    if num_qubits == 1:
        return [("U3", (StackLayer("u3"),))]
    if num_qubits == 4:
        out = [(cid, (_conv(cid, 4),)) for cid in _CONV_IDS]
        return out + [("Pool-U3", (StackLayer("pool"), StackLayer("u3")))]
    if num_qubits == 16:
        out = [(f"Pool-{cid}", (StackLayer("pool"), _conv(cid, 4))) for cid in _CONV_IDS]
        out += [(f"Interpol-{cid}", (StackLayer("interp"), _conv(cid, 9))) for cid in _CONV_IDS]
        pu = (StackLayer("pool"), StackLayer("u3"), StackLayer("pool"), StackLayer("u3"))
        return out + [("Pool-U3-Pool-U3", pu)]
    raise ModelError(f"the grid search covers 1, 4 and 16 qubits, not {num_qubits}")


def grid_search_menu(num_qubits: int) -> list[RegularModel]:
    """Every (fragment pipeline, layer configuration) pair for ``num_qubits``."""
    stacks = _stacks(num_qubits)
    return [
        RegularModel(_fragment(p), stack, f"{p} -> {label}")
        for p in _PIPELINES[num_qubits]
        for label, stack in stacks
    ]


NAMED_MODELS = {
    "regular-1q-best": "Rx-Ry-Rz-Rx-Ry -> U3",
    "regular-4q-best": "U3-U3-U3-U3 -> C5",
    "regular-16q-best": "U3-U3-U3 -> Pool-C2",
}


def named_model(name: str) -> RegularModel:
    """A grid-search model by its ``"pipeline -> layers"`` name or a short alias."""
    target = NAMED_MODELS.get(name, name)
    norm = target.replace(" ", "")
    for n in _PIPELINES:
        if norm.split("->")[0] not in _PIPELINES[n]:
            continue
        for model in grid_search_menu(n):
            if model.name.replace(" ", "") == norm:
                return model
    raise ModelError(f"unknown model {name!r}")


# ---------------------------------------------------------------------------
# Serialization


def _circuit_doc(circuit: ParameterizedCircuit, ref: dict | None) -> dict:
    return dict(ref) if ref else {"inline": circuit_to_dict(circuit)}


def _circuit_from_doc(doc: dict, default_arch: str) -> tuple[ParameterizedCircuit, dict | None]:
    if "inline" in doc:
        return circuit_from_dict(doc["inline"]), None
    try:
        circuit = baseline_circuit(doc["id"], int(doc["qubits"]), doc.get("arch", default_arch))
    except (KeyError, CircuitError) as exc:
        raise ModelError(f"bad circuit reference {doc}: {exc}") from exc
    return circuit, dict(doc)


def model_to_dict(model: HybridModel | RegularModel) -> dict:
    if isinstance(model, HybridModel):
        return {
            "type": "hybrid",
            "name": model.name,
            "variant": model.variant,
            "layers": [
                {
                    "kernel": layer.kernel,
                    "stride": layer.stride,
                    "pooling": layer.pooling,
                    "circuit": _circuit_doc(layer.circuit, layer.circuit_ref),
                }
                for layer in model.layers
            ],
        }
    return {
        "type": "regular",
        "name": model.name,
        "fragment": model.fragment.to_dict(),
        "stack": [
            {"kind": layer.kind, "circuit": _circuit_doc(layer.circuit, layer.circuit_ref)}
            if layer.kind == "conv"
            else {"kind": layer.kind}
            for layer in model.stack
        ],
    }


def model_from_dict(doc: dict) -> HybridModel | RegularModel:
    try:
        kind = doc["type"]
        if kind == "hybrid":
            layers = []
            for d in doc["layers"]:
                circuit, ref = _circuit_from_doc(d["circuit"], "hybrid")
                layers.append(HybridLayer(int(d["kernel"]), int(d["stride"]), circuit, bool(d.get("pooling")), ref))
            return HybridModel(doc.get("variant", "II"), tuple(layers), doc.get("name", "hybrid"))
        if kind == "regular":
            stack = []
            for d in doc["stack"]:
                if d["kind"] == "conv":
                    circuit, ref = _circuit_from_doc(d["circuit"], "regular")
                    stack.append(StackLayer("conv", circuit, ref))
                else:
                    stack.append(StackLayer(d["kind"]))
            return RegularModel(FragmentSpec.from_dict(doc["fragment"]), tuple(stack), doc.get("name", "regular"))
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed model document: {exc}") from exc
    raise ModelError(f"unknown model type {doc.get('type')!r}")


def model_to_json(model, **kwargs) -> str:
    return json.dumps(model_to_dict(model), **kwargs)


def model_from_json(text: str):
    return model_from_dict(json.loads(text))
