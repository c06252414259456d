"""Build a convolution circuit, simulate it and score it.

We take the two-qubit baseline C2, check that its statevector evolution
agrees with its full unitary, then measure how well it covers the space of
states (expressibility), how much it entangles (Meyer-Wallach Q) and how it
fares on the search objective.  A small sampling budget keeps this quick;
the CLI's ``--budget paper`` uses the full one.
"""

import numpy as np

from qcnn_forge.library import baseline_circuit
from qcnn_forge.metrics import (
    SamplingBudget,
    ThresholdSet,
    evaluate_circuit,
    haar_fidelity_histogram,
    haar_mean_entanglement,
    point_mass_expressibility,
)
from qcnn_forge.qsim import circuit_complexity, circuit_unitary, haar_random_states, run_circuit


def describe(gate):
    slots = f" {list(gate.param_slots)}" if gate.param_slots else ""
    return f"{gate.kind.label} q{','.join(map(str, gate.qubits))}{slots}"


circuit = baseline_circuit("C2", 2, "regular")
print("C2 gates:")
for gate in circuit.gates:
    print("   ", describe(gate))
print("complexity (params, depth, gates):", circuit_complexity(circuit))

rng = np.random.default_rng(0)
params = rng.uniform(0, 2 * np.pi, circuit.num_params)
psi = haar_random_states(2, 1, rng)[0]
diff = np.abs(run_circuit(circuit, params, psi) - circuit_unitary(circuit, params) @ psi).max()
print(f"statevector vs unitary: max difference {diff:.1e}")

hist = haar_fidelity_histogram(2)
print(f"worst possible expressibility at 2 qubits: {point_mass_expressibility(hist):.3f}")
print(f"Haar mean entanglement at 2 qubits: {haar_mean_entanglement(2):.3f}")

budget = SamplingBudget(num_inputs=4, num_weight_samples=500)
for cid in ("C1", "C2", "C6", "AS"):
    report = evaluate_circuit(baseline_circuit(cid, 2, "regular"), "regular", budget,
                              ThresholdSet.for_qubits(2), cid)
    print(f"{cid}: expr={report.expr_mean:.3f} entgl={report.entgl_mean:.3f} L_PQC={report.l_pqc:.3f}")
