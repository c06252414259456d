import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcnn_forge import search
from qcnn_forge.library import baseline_circuit
from qcnn_forge.metrics import SamplingBudget
from qcnn_forge.qsim import GateKind, ParameterizedCircuit, circuit_complexity
from qcnn_forge.search import (
    FRESH,
    GENE_KINDS,
    Genome,
    GenomeError,
    SearchConfig,
    Slot,
    TpeSurrogate,
    TrialRecord,
    decode,
    genome_hash,
    run_search,
    sample_genome,
)

TINY = SamplingBudget(2, 60)
SMALL = ParameterizedCircuit.build(2, [("RY", 0, 0), ("CX", (0, 1)), ("RY", 1, 1)])


def genome_of(circuit: ParameterizedCircuit) -> Genome:
    seen = set()
    slots = []
    for g in circuit.gates:
        choices = []
        for s in g.param_slots:
            choices.append(s if s in seen else FRESH)
            seen.add(s)
        slots.append(Slot(g.kind, g.qubits, tuple(choices)))
    return Genome(circuit.num_qubits, tuple(slots))


class TestGenome:
    def test_empty(self):
        assert circuit_complexity(decode(Genome(2))) == (0, 0, 0)

    def test_transcribed_hybrid_ansatz(self):
        target = baseline_circuit("AS", 2, "hybrid")
        circuit = decode(genome_of(target))
        assert circuit == target
        assert circuit_complexity(circuit) == (2, 4, 5)

    def test_gate_cap(self):
        with pytest.raises(GenomeError):
            decode(Genome(2, tuple(Slot(GateKind.H, (0,)) for _ in range(11))))

    def test_param_cap(self):
        with pytest.raises(GenomeError):
            decode(Genome(2, tuple(Slot(GateKind.RY, (q % 2,), (FRESH,)) for q in range(3))))

    def test_depth_cap(self):
        with pytest.raises(GenomeError):
            decode(Genome(2, tuple(Slot(GateKind.H, (0,)) for _ in range(7))))

    def test_reuse_before_fresh(self):
        with pytest.raises(GenomeError):
            decode(Genome(2, (Slot(GateKind.RY, (0,), (0,)),)))

    def test_shared_parameter(self):
        g = Genome(2, (Slot(GateKind.RY, (0,), (FRESH,)), Slot(GateKind.RZ, (1,), (0,))))
        assert decode(g).num_params == 1

    def test_hash(self):
        a = decode(genome_of(baseline_circuit("AS", 2, "hybrid")))
        b = decode(genome_of(baseline_circuit("AS", 2, "hybrid")))
        c = decode(genome_of(SMALL))
        assert genome_hash(a) == genome_hash(b) != genome_hash(c)
        assert len(genome_hash(a)) == 16


class TestSampling:
    @given(seed=st.integers(0, 100_000), n=st.sampled_from([2, 3, 4]))
    @settings(max_examples=60, deadline=None)
    def test_samples_respect_caps(self, seed, n):
        g = sample_genome(n, TpeSurrogate(n).prior(), np.random.default_rng(seed))
        c = decode(g)
        p, d, k = circuit_complexity(c)
        assert p <= n and d <= 3 * n and k <= 5 * n

    def test_deterministic(self):
        s = TpeSurrogate(2)
        a = s.propose(np.random.default_rng(11))
        b = s.propose(np.random.default_rng(11))
        assert a == b

    def test_random_mode_uniform_first_kind(self):
        s = TpeSurrogate(3, enabled=False)
        rng = np.random.default_rng(0)
        counts = np.zeros(len(GENE_KINDS))
        draws = 4000
        for _ in range(draws):
            g = s.propose(rng)
            if g.slots:
                counts[GENE_KINDS.index(g.slots[0].kind)] += 1
        freq = counts / counts.sum()
        assert np.allclose(freq, 1 / len(GENE_KINDS), atol=0.02)

    def test_surrogate_favours_entangling_gates(self):
        n = 2
        s = TpeSurrogate(n)
        rng = np.random.default_rng(1)

        def two_qubit_share(g):
            return np.mean([slot.kind.arity == 2 for slot in g.slots]) if g.slots else 0.0

        for _ in range(200):
            g = s.propose(rng) if len(s.observations) < s.n_startup else sample_genome(n, s.prior(), rng)
            s.observe(g, 1.0 - two_qubit_share(g))
        prior_rng, tpe_rng = np.random.default_rng(2), np.random.default_rng(3)
        prior_share = np.mean([two_qubit_share(sample_genome(n, s.prior(), prior_rng)) for _ in range(1000)])
        tpe_share = np.mean([two_qubit_share(s.propose(tpe_rng)) for _ in range(1000)])
        assert tpe_share > prior_share


class TestRunSearch:
    def test_single_trial(self):
        result = run_search(SearchConfig(num_trials=1, budget=TINY))
        assert len(result.log) == 1
        assert result.log.records[0].status == "evaluated"
        assert result.best[1].trial == 0

    def test_deterministic(self):
        cfg = SearchConfig(num_trials=40, budget=TINY, seed=5)
        assert run_search(cfg).log.same_trials(run_search(cfg).log)

    def test_seed_changes_log(self):
        a = run_search(SearchConfig(num_trials=25, budget=TINY, seed=1)).log
        b = run_search(SearchConfig(num_trials=25, budget=TINY, seed=2)).log
        assert not a.same_trials(b)

    def test_duplicates_skipped(self, monkeypatch):
        fixed = genome_of(SMALL)
        monkeypatch.setattr(search, "propose", lambda surrogate, rng: fixed)
        log = run_search(SearchConfig(num_trials=5, max_duplicates=2, budget=TINY)).log
        assert [r.status for r in log] == ["evaluated"] * 2 + ["skipped-duplicate"] * 3
        assert len({r.l_pqc for r in log}) == 1

    def test_ranking_and_stream(self, tmp_path):
        path = tmp_path / "log.jsonl"
        with open(path, "w") as fh:
            result = run_search(SearchConfig(num_trials=30, budget=TINY, seed=3), log_stream=fh)
        lines = path.read_text().splitlines()
        assert len(lines) == 30
        assert json.loads(lines[0])["trial"] == 0
        keys = [(r.l_pqc if math.isfinite(r.l_pqc) else 1e300) for _, r in result.ranked]
        assert keys == sorted(keys)
        assert result.log.records[-1].best_so_far == min(r.l_pqc for r in result.log)

    def test_record_json_handles_inf(self):
        r = TrialRecord(0, "abc", "evaluated", math.inf, math.inf, 0.5, 1, 1, 1, math.inf, 0.0)
        assert json.loads(r.to_json())["l_pqc"] == "inf"

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SearchConfig(num_qubits=1)
        with pytest.raises(ValueError):
            SearchConfig(mode="grid")
