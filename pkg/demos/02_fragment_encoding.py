"""Compress an image into a handful of qubits with a fragment encoding.

Each 2x2 window of angles is interleaved with trainable single-qubit gates.
Because everything acting on one qubit is a single-qubit gate, the whole
product collapses into one U3 per qubit, so a 32x32 image needs only as many
qubits as the encoding has output cells.  We also count how many collapsed
gates must be held in memory when the window tree is evaluated depth first.
"""

import numpy as np

from qcnn_forge.encodings import (
    FragmentLayer,
    FragmentSpec,
    collapse_u3,
    encode_qe,
    fragment_encode,
    memory_bound,
    memory_liveness_oracle,
)
from qcnn_forge.qsim import GateKind, gate_matrix

seq = [encode_qe([0.3])[0], gate_matrix(GateKind.RZ, [1.1]), encode_qe([2.0])[0]]
u3 = collapse_u3(seq)
product = seq[2] @ seq[1] @ seq[0]
print(f"three gates collapse to U3({u3.theta:.3f}, {u3.phi:.3f}, {u3.lam:.3f}),"
      f" error {np.abs(u3.matrix() - product).max():.1e}")

spec = FragmentSpec(tuple(FragmentLayer((2, 2), 2, ("U3",)) for _ in range(3)), "QE", (32, 32))
print(f"three 2x2 layers map 32x32 pixels onto a {spec.output_shape} grid of qubits,"
      f" with {spec.num_params} trainable angles")

rng = np.random.default_rng(1)
image = rng.uniform(0, np.pi, (32, 32))
gates = fragment_encode(image, spec, rng.uniform(0, 2 * np.pi, spec.num_params))
print("first qubit's gate:", gates[0])

for n, k, m in [(4, 2, 2), (16, 2, 2), (16, 3, 2)]:
    print(f"memory bound n={n} k={k} m={m}: formula {memory_bound(n, k, m)},"
          f" simulated {memory_liveness_oracle(n, k, m)}")
