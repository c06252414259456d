"""Dense statevector simulation of parameterized circuits.

Conventions
-----------
* Little-endian qubit order: qubit 0 is the least significant bit of the
  amplitude index, so ``X`` on qubit 1 of ``|00>`` gives index 2 (``|10>``
  when written most significant bit first).
* A two-qubit gate matrix is written in the basis ``|a b>`` where ``a`` is the
  first listed qubit (the control for controlled gates).  Its matrix index is
  ``2*a + b``.
* Every function accepts an optional leading batch axis.  A state is an array
  of shape ``(..., 2**n)`` and a parameter vector an array of shape
  ``(..., p)``.  Batch axes broadcast against each other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GateKind",
    "GateApplication",
    "ParameterizedCircuit",
    "CircuitError",
    "gate_matrix",
    "apply_matrix",
    "apply_gate",
    "run_circuit",
    "circuit_unitary",
    "zero_state",
    "basis_state",
    "haar_random_states",
    "fidelity",
    "last_qubit_prob1",
    "reduced_density_matrix",
    "single_qubit_purity",
    "circuit_complexity",
    "circuit_to_dict",
    "circuit_from_dict",
    "circuit_to_json",
    "circuit_from_json",
]


class CircuitError(ValueError):
    """Raised when a gate, circuit or state violates its contract."""


class GateKind(Enum):
    """Gate vocabulary; each member carries (label, arity, number of angles)."""

    H = ("H", 1, 0)
    SX = ("SX", 1, 0)
    X = ("X", 1, 0)
    Y = ("Y", 1, 0)
    Z = ("Z", 1, 0)
    RX = ("Rx", 1, 1)
    RY = ("Ry", 1, 1)
    RZ = ("Rz", 1, 1)
    U3 = ("U3", 1, 3)
    CX = ("CX", 2, 0)
    CY = ("CY", 2, 0)
    CZ = ("CZ", 2, 0)
    ECR = ("ECR", 2, 0)
    CRX = ("CRX", 2, 1)
    CRY = ("CRY", 2, 1)
    CRZ = ("CRZ", 2, 1)

    def __init__(self, label: str, arity: int, num_params: int):
        self.label = label
        self.arity = arity
        self.num_params = num_params

    @classmethod
    def parse(cls, text: str) -> "GateKind":
        key = text.strip().upper()
        if key in cls.__members__:
            return cls[key]
        raise CircuitError(f"unknown gate kind {text!r}")


_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
_ECR = (np.kron(_I2, _X) - np.kron(_X, _Y)) / np.sqrt(2)

_FIXED = {
    GateKind.H: _H,
    GateKind.SX: _SX,
    GateKind.X: _X,
    GateKind.Y: _Y,
    GateKind.Z: _Z,
    GateKind.ECR: _ECR,
}
_CONTROLLED_FIXED = {GateKind.CX: _X, GateKind.CY: _Y, GateKind.CZ: _Z}
_CONTROLLED_ROT = {GateKind.CRX: GateKind.RX, GateKind.CRY: GateKind.RY, GateKind.CRZ: GateKind.RZ}


def _controlled(block: np.ndarray) -> np.ndarray:
    """Embed a (possibly batched) 2x2 block as |1><1| (x) block + |0><0| (x) I."""
    shape = block.shape[:-2]
    out = np.zeros(shape + (4, 4), dtype=complex)
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    out[..., 2:, 2:] = block
    return out


def _rotation(kind: GateKind, theta: np.ndarray) -> np.ndarray:
    half = np.asarray(theta, dtype=float) / 2.0
    c, s = np.cos(half), np.sin(half)
    out = np.empty(half.shape + (2, 2), dtype=complex)
    if kind is GateKind.RX:
        out[..., 0, 0] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
        out[..., 1, 1] = c
    elif kind is GateKind.RY:
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
    else:
        out[..., 0, 0] = np.exp(-1j * half)
        out[..., 0, 1] = 0.0
        out[..., 1, 0] = 0.0
        out[..., 1, 1] = np.exp(1j * half)
    return out


def u3_matrix(theta, phi, lam) -> np.ndarray:
    """U3 = [[cos(t/2), -e^{i l} sin(t/2)], [e^{i p} sin(t/2), e^{i(p+l)} cos(t/2)]]."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    shape = np.broadcast_shapes(theta.shape, phi.shape, lam.shape)
    out = np.empty(shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -np.exp(1j * lam) * s
    out[..., 1, 0] = np.exp(1j * phi) * s
    out[..., 1, 1] = np.exp(1j * (phi + lam)) * c
    return out


def gate_matrix(kind: GateKind, params=()) -> np.ndarray:
    """Matrix of ``kind`` for angles ``params`` of shape ``(..., num_params)``.

    A leading batch shape on ``params`` yields a batch of matrices.
    """
    params = np.asarray(params, dtype=float)
    if kind.num_params == 0:
        if params.size != 0:
            raise CircuitError(f"{kind.label} takes no parameters, got {params.shape[-1]}")
        if kind in _FIXED:
            return _FIXED[kind].copy()
        return _controlled(_CONTROLLED_FIXED[kind])
    if params.ndim == 0 or params.shape[-1] != kind.num_params:
        got = 1 if params.ndim == 0 else params.shape[-1]
        raise CircuitError(f"{kind.label} takes {kind.num_params} parameter(s), got {got}")
    if kind is GateKind.U3:
        return u3_matrix(params[..., 0], params[..., 1], params[..., 2])
    if kind in _CONTROLLED_ROT:
        return _controlled(_rotation(_CONTROLLED_ROT[kind], params[..., 0]))
    return _rotation(kind, params[..., 0])


@dataclass(frozen=True)
class GateApplication:
    """One gate acting on ``qubits`` with angles taken from ``param_slots``."""

    kind: GateKind
    qubits: tuple[int, ...]
    param_slots: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "param_slots", tuple(int(s) for s in self.param_slots))
        if len(self.qubits) != self.kind.arity:
            raise CircuitError(f"{self.kind.label} acts on {self.kind.arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit in {self.kind.label}{self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.qubits}")
        if len(self.param_slots) != self.kind.num_params:
            raise CircuitError(
                f"{self.kind.label} needs {self.kind.num_params} parameter slot(s), got {self.param_slots}"
            )
        if any(s < 0 for s in self.param_slots):
            raise CircuitError(f"negative parameter slot in {self.param_slots}")


@dataclass(frozen=True)
class ParameterizedCircuit:
    """Ordered gate list over ``num_qubits`` qubits with a shared parameter vector."""

    num_qubits: int
    gates: tuple[GateApplication, ...] = ()
    num_params: int = field(default=-1)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        used = max((s for g in gates for s in g.param_slots), default=-1) + 1
        if self.num_params == -1:
            object.__setattr__(self, "num_params", used)
        elif self.num_params < used:
            raise CircuitError(f"parameter slot {used - 1} exceeds num_params={self.num_params}")
        for g in gates:
            if max(g.qubits) >= self.num_qubits:
                raise CircuitError(f"{g.kind.label}{g.qubits} out of range for {self.num_qubits} qubits")

    @classmethod
    def build(cls, num_qubits: int, spec: Iterable[tuple], num_params: int = -1) -> "ParameterizedCircuit":
        """Build from ``(kind, qubits[, slots])`` tuples; kinds may be strings."""
        gates = []
        for item in spec:
            kind = item[0] if isinstance(item[0], GateKind) else GateKind.parse(item[0])
            qubits = item[1] if isinstance(item[1], (tuple, list)) else (item[1],)
            slots = item[2] if len(item) > 2 else ()
            slots = slots if isinstance(slots, (tuple, list)) else (slots,)
            gates.append(GateApplication(kind, tuple(qubits), tuple(slots)))
        return cls(num_qubits, tuple(gates), num_params)

    def __len__(self) -> int:
        return len(self.gates)


# ---------------------------------------------------------------------------
# States


def zero_state(num_qubits: int) -> np.ndarray:
    state = np.zeros(2**num_qubits, dtype=complex)
    state[0] = 1.0
    return state


def basis_state(num_qubits: int, index: int) -> np.ndarray:
    state = np.zeros(2**num_qubits, dtype=complex)
    state[index] = 1.0
    return state


def haar_random_states(num_qubits: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random pure states as an array of shape (count, 2**n)."""
    dim = 2**num_qubits
    z = rng.normal(size=(count, dim)) + 1j * rng.normal(size=(count, dim))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def _num_qubits_of(state: np.ndarray) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise CircuitError(f"state length {dim} is not a power of two")
    return n


def _check_qubit(qubit: int, n: int) -> None:
    if not 0 <= qubit < n:
        raise CircuitError(f"qubit {qubit} out of range for {n} qubits")


# ---------------------------------------------------------------------------
# Gate application


def apply_matrix(state: np.ndarray, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a ``2^k x 2^k`` matrix (optionally batched) to ``qubits`` of ``state``.

    ``qubits[0]`` is the most significant bit of the matrix index.
    """
    state = np.asarray(state)
    n = _num_qubits_of(state)
    k = len(qubits)
    for q in qubits:
        _check_qubit(q, n)
    matrix = np.asarray(matrix)
    batch = np.broadcast_shapes(state.shape[:-1], matrix.shape[:-2])
    state = np.broadcast_to(state, batch + state.shape[-1:])
    nb = len(batch)
    psi = state.reshape(batch + (2,) * n)
    axes = [nb + n - 1 - q for q in qubits]
    psi = np.moveaxis(psi, axes, range(-k, 0))
    moved_shape = psi.shape
    psi = psi.reshape(moved_shape[: nb + n - k] + (2**k,))
    if matrix.ndim == 2:
        out = psi @ matrix.T
    else:
        m = np.broadcast_to(matrix, batch + matrix.shape[-2:])
        m = m.reshape(batch + (1,) * (n - k) + m.shape[-2:])
        out = np.matmul(m, psi[..., None])[..., 0]
    out = out.reshape(moved_shape)
    out = np.moveaxis(out, range(-k, 0), axes)
    return out.reshape(batch + (2**n,))


def apply_gate(state: np.ndarray, app: GateApplication, params=()) -> np.ndarray:
    """Apply one gate application, reading its angles from the circuit ``params``."""
    params = np.asarray(params, dtype=float)
    if app.kind.num_params:
        if params.ndim == 0 or max(app.param_slots) >= params.shape[-1]:
            raise CircuitError(f"parameter slots {app.param_slots} not available")
        mat = gate_matrix(app.kind, params[..., list(app.param_slots)])
    else:
        mat = gate_matrix(app.kind)
    return apply_matrix(state, mat, app.qubits)


def run_circuit(circuit: ParameterizedCircuit, params=(), initial: np.ndarray | None = None) -> np.ndarray:
    """Apply the circuit's gates in list order.

    ``params`` has shape ``(..., num_params)`` and ``initial`` shape
    ``(..., 2**n)``; batch axes broadcast.  ``initial`` defaults to ``|0...0>``.
    """
    params = np.asarray(params, dtype=float)
    if circuit.num_params == 0 and params.ndim == 0:
        params = np.zeros(0)
    if params.ndim == 0 or params.shape[-1] != circuit.num_params:
        raise CircuitError(f"expected {circuit.num_params} parameters, got shape {params.shape}")
    state = zero_state(circuit.num_qubits) if initial is None else np.asarray(initial, dtype=complex)
    if _num_qubits_of(state) != circuit.num_qubits:
        raise CircuitError(f"state has {_num_qubits_of(state)} qubits, circuit has {circuit.num_qubits}")
    if params.ndim > 1:
        state = np.broadcast_to(state, np.broadcast_shapes(params.shape[:-1], state.shape[:-1]) + state.shape[-1:])
    state = np.array(state, dtype=complex)
    for app in circuit.gates:
        state = apply_gate(state, app, params)
    return state


def circuit_unitary(circuit: ParameterizedCircuit, params=()) -> np.ndarray:
    """Full unitary, column j = circuit applied to basis state j."""
    dim = 2**circuit.num_qubits
    cols = run_circuit(circuit, params, np.eye(dim, dtype=complex))
    return cols.T


# ---------------------------------------------------------------------------
# Observables


def fidelity(a: np.ndarray, b: np.ndarray) -> np.ndarray | float:
    """|<a|b>|^2 along the last axis."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[-1]:
        raise CircuitError("fidelity of states with different dimensions")
    f = np.abs(np.sum(np.conj(a) * b, axis=-1)) ** 2
    f = np.clip(f, 0.0, 1.0)
    return float(f) if f.ndim == 0 else f


def _split(state: np.ndarray, qubit: int) -> np.ndarray:
    n = _num_qubits_of(state)
    _check_qubit(qubit, n)
    return state.reshape(state.shape[:-1] + (2 ** (n - 1 - qubit), 2, 2**qubit))


def last_qubit_prob1(state: np.ndarray, qubit: int | None = None) -> np.ndarray | float:
    """Exact probability of reading 1 on ``qubit`` (default: highest index)."""
    state = np.asarray(state)
    if qubit is None:
        qubit = _num_qubits_of(state) - 1
    psi = _split(state, qubit)
    p = np.sum(np.abs(psi[..., 1, :]) ** 2, axis=(-2, -1))
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def reduced_density_matrix(state: np.ndarray, qubit: int) -> np.ndarray:
    """Single-qubit reduced density matrix of ``qubit`` (partial trace over the rest)."""
    psi = _split(np.asarray(state), qubit)
    return np.einsum("...haj,...hbj->...ab", psi, np.conj(psi))


def single_qubit_purity(state: np.ndarray, qubit: int) -> np.ndarray | float:
    """Tr(rho_k^2) for the reduced state of ``qubit``; requires at least two qubits."""
    if _num_qubits_of(np.asarray(state)) < 2:
        raise CircuitError("single-qubit purity needs a state of at least two qubits")
    rho = reduced_density_matrix(state, qubit)
    p = np.sum(np.abs(rho) ** 2, axis=(-2, -1))
    return float(p) if p.ndim == 0 else p


# ---------------------------------------------------------------------------
# Complexity and serialization


def circuit_complexity(circuit: ParameterizedCircuit) -> tuple[int, int, int]:
    """(params, depth, gates) with depth from as-soon-as-possible layering."""
    front = [0] * circuit.num_qubits
    depth = 0
    for g in circuit.gates:
        layer = max(front[q] for q in g.qubits) + 1
        for q in g.qubits:
            front[q] = layer
        depth = max(depth, layer)
    return circuit.num_params, depth, len(circuit.gates)


def circuit_to_dict(circuit: ParameterizedCircuit) -> dict:
    return {
        "num_qubits": circuit.num_qubits,
        "num_params": circuit.num_params,
        "gates": [
            {"kind": g.kind.label, "qubits": list(g.qubits), "param_slots": list(g.param_slots)}
            for g in circuit.gates
        ],
    }


def circuit_from_dict(doc: dict) -> ParameterizedCircuit:
    try:
        gates = tuple(
            GateApplication(GateKind.parse(g["kind"]), tuple(g["qubits"]), tuple(g.get("param_slots", ())))
            for g in doc["gates"]
        )
        return ParameterizedCircuit(int(doc["num_qubits"]), gates, int(doc.get("num_params", -1)))
    except (KeyError, TypeError) as exc:
        raise CircuitError(f"malformed circuit document: {exc}") from exc


def circuit_to_json(circuit: ParameterizedCircuit, **kwargs) -> str:
    return json.dumps(circuit_to_dict(circuit), **kwargs)


def circuit_from_json(text: str) -> ParameterizedCircuit:
    return circuit_from_dict(json.loads(text))
