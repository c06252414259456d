"""Search for a two-qubit convolution circuit.

A tree-structured Parzen estimator proposes gate genomes, each is scored on
expressibility, entanglement and size, and the best few are printed.  Two
hundred trials at a reduced sampling budget take a few seconds; the
acceptance suite runs two thousand.
"""

from qcnn_forge.metrics import SamplingBudget
from qcnn_forge.qsim import circuit_complexity
from qcnn_forge.search import SearchConfig, run_search


def describe(gate):
    slots = f" {list(gate.param_slots)}" if gate.param_slots else ""
    return f"{gate.kind.label} q{','.join(map(str, gate.qubits))}{slots}"


config = SearchConfig(num_qubits=2, num_trials=200, budget=SamplingBudget(4, 400), seed=3)
result = run_search(config)
print(f"{len(result.log)} trials, best-so-far trajectory:",
      [round(r.best_so_far, 3) for r in list(result.log)[::40]])
for circuit, record in result.ranked[:3]:
    print(f"L_PQC={record.l_pqc:.3f} complexity={circuit_complexity(circuit)}")
    for gate in circuit.gates:
        print("    ", describe(gate))
