import numpy as np
import pytest

from qcnn_forge.library import BASELINE_IDS, available_baselines, baseline_circuit
from qcnn_forge.qsim import CircuitError, circuit_complexity, circuit_unitary


@pytest.mark.parametrize(
    "cid, n, arch, expected",
    [
        ("C2", 2, "regular", (3, 3, 4)),
        ("C6", 3, "regular", (12, 8, 12)),
        ("C5", 4, "regular", (8, 9, 16)),
        ("AS", 2, "hybrid", (2, 4, 5)),
    ],
)
def test_documented_complexities(cid, n, arch, expected):
    assert circuit_complexity(baseline_circuit(cid, n, arch)) == expected


@pytest.mark.parametrize("cid, n", available_baselines())
@pytest.mark.parametrize("arch", ["hybrid", "regular"])
def test_every_circuit_builds_and_is_unitary(cid, n, arch):
    c = baseline_circuit(cid, n, arch)
    assert c.num_qubits == n
    if n <= 4:
        u = circuit_unitary(c, np.random.default_rng(0).uniform(0, 6, c.num_params))
        assert np.allclose(u @ u.conj().T, np.eye(2**n), atol=1e-10)


def test_ids_are_case_insensitive():
    assert baseline_circuit("c2", 2) == baseline_circuit("C2", 2)


@pytest.mark.parametrize("cid, n", [("C9", 2), ("C1", 5), ("C6", 4)])
def test_unknown_combinations(cid, n):
    with pytest.raises(CircuitError):
        baseline_circuit(cid, n)


def test_unknown_architecture():
    with pytest.raises(CircuitError):
        baseline_circuit("AS", 2, "photonic")


def test_menu_covers_all_ids():
    assert {cid for cid, _ in available_baselines()} == set(BASELINE_IDS)
