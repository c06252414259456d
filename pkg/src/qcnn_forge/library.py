"""Built-in convolution circuits: six reference layouts and the searched ansatzes.

Circuits are transcribed from their published diagrams with qubit 0 as the top
wire.  ``(C1, 9)`` style layouts that were never drawn are extended from the
3- and 4-qubit patterns.  The searched ansatzes ("AS") differ between the
hybrid and the regular architecture, so ``baseline_circuit`` takes the
architecture as a keyword.
"""

from __future__ import annotations

from .qsim import CircuitError, ParameterizedCircuit

__all__ = ["BASELINE_IDS", "SUPPORTED_QUBITS", "baseline_circuit", "available_baselines"]

BASELINE_IDS = ("C1", "C2", "C3", "C4", "C5", "C6", "AS")
SUPPORTED_QUBITS = (2, 3, 4, 9)


def _c1(n: int) -> ParameterizedCircuit:
    # Hadamard wall, CZ ladder from the bottom wire upwards, Rx wall.
    gates = [("H", q) for q in range(n)]
    gates += [("CZ", (q, q + 1)) for q in range(n - 2, -1, -1)]
    gates += [("RX", q, q) for q in range(n)]
    return ParameterizedCircuit.build(n, gates)


def _c2(n: int) -> ParameterizedCircuit:
    # Tree of CX gates; every CX target receives a fresh Ry.
    gates = [("RY", q, q) for q in range(n)]
    slot = n
    if n == 2:
        pairs = [[(0, 1)]]
        rotate_last_only = True
    elif n == 3:
        pairs = [[(0, 1), (1, 2)]]
        rotate_last_only = True
    elif n == 4:
        pairs = [[(0, 1), (2, 3)], [(1, 3)]]
        rotate_last_only = False
    else:
        # Nine wires: fold wire 0 into wire 1, then a binary tree over 1..8.
        pairs = [[(0, 1)], [(1, 2), (3, 4), (5, 6), (7, 8)], [(2, 4), (6, 8)], [(4, 8)]]
        rotate_last_only = False
    for level, level_pairs in enumerate(pairs):
        for c, t in level_pairs:
            gates.append(("CX", (c, t)))
        if rotate_last_only:
            continue
        if n == 9 and level == 0:
            continue
        for _, t in level_pairs:
            gates.append(("RY", t, slot))
            slot += 1
    if rotate_last_only:
        gates.append(("RY", n - 1, slot))
    return ParameterizedCircuit.build(n, gates)


def _c3(n: int) -> ParameterizedCircuit:
    # Rx wall, Rz wall, CX chain from the bottom wire upwards.
    gates = [("RX", q, q) for q in range(n)]
    gates += [("RZ", q, n + q) for q in range(n)]
    gates += [("CX", (q + 1, q)) for q in range(n - 2, -1, -1)]
    return ParameterizedCircuit.build(n, gates)


def _c4(n: int) -> ParameterizedCircuit:
    # Ry wall, CZ ring (ladder from the bottom, then closing CZ), Ry wall.
    gates = [("RY", q, q) for q in range(n)]
    gates += [("CZ", (q, q + 1)) for q in range(n - 2, -1, -1)]
    if n > 2:
        gates.append(("CZ", (0, n - 1)))
    gates += [("RY", q, n + q) for q in range(n)]
    return ParameterizedCircuit.build(n, gates)


# Nine-wire Circuit 5: the first ring keeps the 3/4-wire order (descending
# from the last wire); the second ring starts with the same CX(n-1 -> n-2) and
# then steps through the wires with stride two, which gives the published
# depth of 13.  Control i targets i+1 in the first ring and i-1 in the second.
_C5_RING1_9 = (8, 7, 6, 5, 4, 3, 2, 1, 0)
_C5_RING2_9 = (8, 1, 3, 5, 7, 0, 2, 4, 6)


def _c5(n: int) -> ParameterizedCircuit:
    gates = [("RY", q, q) for q in range(n)]
    if n == 2:
        gates += [("CX", (1, 0))]
        gates += [("RY", q, n + q) for q in range(n)]
        gates += [("CX", (0, 1))]
        return ParameterizedCircuit.build(n, gates)
    if n == 9:
        ring1, ring2 = _C5_RING1_9, _C5_RING2_9
    else:
        ring1 = tuple(range(n - 1, -1, -1))
        ring2 = (n - 1,) + tuple(range(0, n - 1))
    gates += [("CX", (c, (c + 1) % n)) for c in ring1]
    gates += [("RY", q, n + q) for q in range(n)]
    gates += [("CX", (c, (c - 1) % n)) for c in ring2]
    return ParameterizedCircuit.build(n, gates)


def _c6(n: int) -> ParameterizedCircuit:
    if n == 2:
        gates = [
            ("RY", 0, 0), ("RY", 1, 1), ("CRZ", (1, 0), 2),
            ("RY", 0, 3), ("RY", 1, 4), ("CRZ", (0, 1), 5),
        ]
        return ParameterizedCircuit.build(2, gates)
    gates = [
        ("RY", 0, 0), ("RY", 1, 1), ("RY", 2, 2),
        ("CRZ", (2, 0), 3), ("CRZ", (1, 2), 4), ("CRZ", (0, 1), 5),
        ("RY", 0, 6), ("RY", 1, 7), ("RY", 2, 8),
        ("CRZ", (2, 1), 9), ("CRZ", (0, 2), 10), ("CRZ", (1, 0), 11),
    ]
    return ParameterizedCircuit.build(3, gates)


def _ecr(in0: int, in1: int) -> tuple:
    """ECR written with the diagram's (input 0, input 1) wires.

    The gate matrix puts its first tensor factor on the first listed qubit;
    the diagrams label that wire "input 1", so the operands are swapped.
    Comparing both orientations against the published entanglement of the
    2- and 3-qubit regular ansatzes selects this reading.
    """
    return ("ECR", (in1, in0))


# Searched ansatzes, ECR entries given in diagram order.
_AS_HYBRID = {
    2: [("Z", 0), ("RY", 1, 0), ("CZ", (0, 1)), ("CRX", (1, 0), 0), ("RY", 1, 1)],
    3: [("SX", 1), ("CX", (0, 2)), ("CY", (1, 0)), ("RY", 2, 0), ("U3", 2, (1, 0, 2))],
    4: [
        ("CRY", (0, 1), 0), ("U3", 3, (0, 0, 0)), ("SX", 0), ("CRY", (1, 2), 0),
        ("RY", 3, 1), ("CY", (3, 1)), ("CY", (0, 2)),
    ],
    9: [
        ("U3", 0, (3, 4, 5)), _ecr(3, 5), ("Z", 7), ("X", 8),
        ("X", 4), ("U3", 8, (0, 1, 2)),
        ("CY", (5, 1)), ("RX", 8, 4),
        ("CY", (1, 4)), ("RZ", 5, 6),
        _ecr(4, 2), ("U3", 5, (7, 8, 5)),
        ("CY", (2, 6)),
        _ecr(4, 2), ("CZ", (6, 8)),
        ("CX", (6, 0)),
        ("CRX", (4, 6), 5),
        ("CY", (0, 7)),
        _ecr(0, 3), ("RZ", 4, 6),
    ],
}

_AS_REGULAR = {
    2: [
        ("RZ", 0, 0), ("Y", 1), ("CRZ", (0, 1), 0), ("U3", 0, (0, 0, 0)),
        ("RY", 1, 0), ("RY", 1, 0), _ecr(1, 0), ("U3", 0, (1, 0, 0)),
    ],
    3: [
        ("RX", 0, 0), ("H", 1), ("RZ", 2, 1), ("U3", 0, (0, 0, 0)), ("RZ", 2, 1),
        ("RY", 0, 0), ("CY", (0, 1)), _ecr(1, 2), ("CRX", (2, 0), 1),
        ("U3", 1, (2, 1, 2)),
    ],
    # The drawing leaves the angle index of the first Rz blank; slot 0 is used.
    4: [
        ("Z", 0), ("RZ", 1, 0), ("U3", 3, (0, 0, 0)),
        _ecr(1, 2),
        ("CX", (2, 1)),
        ("U3", 2, (0, 0, 0)),
        ("RY", 1, 0), ("CX", (2, 3)),
        ("Y", 0), ("U3", 1, (0, 0, 0)), ("Z", 2),
        ("CRZ", (1, 0), 2), ("RZ", 2, 1),
        ("Y", 1), ("RX", 2, 2),
        ("CRY", (3, 1), 2),
        ("RZ", 1, 1), ("U3", 2, (2, 2, 1)), ("RY", 3, 3),
        ("SX", 2),
    ],
    9: [
        ("X", 0), ("U3", 1, (1, 2, 3)), ("RZ", 3, 2), ("RY", 4, 0), ("H", 5),
        ("RX", 4, 1),
        _ecr(1, 8),
        ("SX", 1), ("CY", (4, 6)),
        ("CY", (8, 0)),
        ("RY", 0, 4), _ecr(5, 4), ("H", 6), ("RY", 8, 4),
        ("U3", 6, (1, 4, 5)), ("RZ", 8, 8),
        ("CRX", (4, 7), 4),
        _ecr(1, 6),
        ("SX", 1), ("RX", 4, 6), ("SX", 6),
        ("CRX", (6, 3), 3),
        ("SX", 3), ("RZ", 6, 6),
        _ecr(0, 3),
        ("SX", 0),
        ("CX", (0, 7)),
        _ecr(7, 2),
        ("CX", (0, 5)),
        _ecr(1, 7),
        ("CY", (6, 0)),
        ("CRZ", (7, 5), 6),
        ("CRX", (3, 6), 7),
        ("CX", (3, 1)),
    ],
}

_BUILDERS = {"C1": _c1, "C2": _c2, "C3": _c3, "C4": _c4, "C5": _c5, "C6": _c6}


def available_baselines() -> list[tuple[str, int]]:
    """Every valid (id, qubit count) pair."""
    return [
        (cid, n)
        for cid in BASELINE_IDS
        for n in SUPPORTED_QUBITS
        if not (cid == "C6" and n > 3)
    ]


def baseline_circuit(circuit_id: str, num_qubits: int, arch: str = "regular") -> ParameterizedCircuit:
    """Reference circuit ``circuit_id`` on ``num_qubits`` wires.

    ``arch`` selects which searched ansatz ``"AS"`` refers to (``"hybrid"`` or
    ``"regular"``); it is ignored for C1..C6.
    """
    cid = circuit_id.upper()
    if cid not in BASELINE_IDS:
        raise CircuitError(f"unknown baseline circuit {circuit_id!r}")
    if num_qubits not in SUPPORTED_QUBITS:
        raise CircuitError(f"baseline circuits exist for {SUPPORTED_QUBITS} qubits, not {num_qubits}")
    if cid == "C6" and num_qubits > 3:
        raise CircuitError("C6 is only defined for 2 and 3 qubits")
    if cid == "AS":
        table = {"hybrid": _AS_HYBRID, "regular": _AS_REGULAR}.get(arch)
        if table is None:
            raise CircuitError(f"unknown architecture {arch!r}")
        return ParameterizedCircuit.build(num_qubits, table[num_qubits])
    return _BUILDERS[cid](num_qubits)
