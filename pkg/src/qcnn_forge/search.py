"""Sequential model-based search over gate genomes.

A genome is a variable-length list of gate slots.  Every angle of a slot is
either a fresh parameter or a reuse of an earlier one.  Decoded circuits obey
the caps of ``q`` fresh parameters, depth ``3q`` and ``5q`` gates.

Proposals come from a tree-structured density-ratio model: the observed
trials are split at the ``gamma`` quantile of the objective into a good and a
rest group, smoothed categorical densities are fitted to each group for the
genome length, the gate kind at every position and the fresh-or-reuse choice
at every position, and the candidate with the largest good/rest likelihood
ratio among several draws from the good density is proposed.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from .metrics import SamplingBudget, ThresholdSet, evaluate_circuit
from .qsim import CircuitError, GateApplication, GateKind, ParameterizedCircuit, circuit_complexity, circuit_to_dict

__all__ = [
    "GENE_KINDS",
    "Slot",
    "Genome",
    "GenomeError",
    "decode",
    "genome_hash",
    "SearchConfig",
    "TrialRecord",
    "TrialLog",
    "TpeSurrogate",
    "propose",
    "run_search",
    "SearchResult",
]

GENE_KINDS: tuple[GateKind, ...] = tuple(GateKind)
_KIND_INDEX = {k: i for i, k in enumerate(GENE_KINDS)}
FRESH = -1


class GenomeError(ValueError):
    """Raised when a genome breaks the complexity caps or references bad slots."""


@dataclass(frozen=True)
class Slot:
    """One gate.  ``params`` holds ``FRESH`` or the index of an earlier fresh parameter."""

    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[int, ...] = ()


@dataclass(frozen=True)
class Genome:
    num_qubits: int
    slots: tuple[Slot, ...] = ()

    @property
    def caps(self) -> tuple[int, int, int]:
        q = self.num_qubits
        return q, 3 * q, 5 * q


def decode(genome: Genome) -> ParameterizedCircuit:
    """Circuit with fresh parameters numbered in order of first appearance."""
    params_max, depth_max, gates_max = genome.caps
    if len(genome.slots) > gates_max:
        raise GenomeError(f"{len(genome.slots)} gates exceed the cap of {gates_max}")
    gates = []
    fresh = 0
    for slot in genome.slots:
        if len(slot.params) != slot.kind.num_params:
            raise GenomeError(f"{slot.kind.label} needs {slot.kind.num_params} parameter choices")
        slots = []
        for choice in slot.params:
            if choice == FRESH:
                slots.append(fresh)
                fresh += 1
            elif 0 <= choice < fresh:
                slots.append(choice)
            else:
                raise GenomeError(f"reuse of parameter {choice} before it exists")
        try:
            gates.append(GateApplication(slot.kind, slot.qubits, tuple(slots)))
        except CircuitError as exc:
            raise GenomeError(str(exc)) from exc
    if fresh > params_max:
        raise GenomeError(f"{fresh} parameters exceed the cap of {params_max}")
    try:
        circuit = ParameterizedCircuit(genome.num_qubits, tuple(gates))
    except CircuitError as exc:
        raise GenomeError(str(exc)) from exc
    if circuit_complexity(circuit)[1] > depth_max:
        raise GenomeError(f"depth exceeds the cap of {depth_max}")
    return circuit


def genome_hash(circuit: ParameterizedCircuit) -> str:
    """Duplicate key: hash of the decoded circuit's canonical serialization."""
    text = json.dumps(circuit_to_dict(circuit), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Proposal distributions


@dataclass
class _Choices:
    """Categorical probabilities used while sampling one genome."""

    length: np.ndarray
    kind: np.ndarray  # (positions, kinds)
    reuse: np.ndarray  # (positions,), probability of reusing a parameter


class TpeSurrogate:
    """Good-versus-rest density ratio over length, kinds and reuse choices.

    With ``enabled=False`` (or before ``n_startup`` observations) proposals
    come from the uniform prior grammar.
    """

    def __init__(
        self,
        num_qubits: int,
        gamma: float = 0.2,
        n_startup: int = 20,
        n_candidates: int = 24,
        reuse_prob: float = 0.3,
        prior_weight: float = 1.0,
        enabled: bool = True,
    ):
        self.num_qubits = num_qubits
        self.gamma = gamma
        self.n_startup = n_startup
        self.n_candidates = n_candidates
        self.reuse_prob = reuse_prob
        self.prior_weight = prior_weight
        self.enabled = enabled
        self.observations: list[tuple[Genome, float]] = []

    @property
    def max_gates(self) -> int:
        return 5 * self.num_qubits

    def observe(self, genome: Genome, loss: float) -> None:
        self.observations.append((genome, loss))

    def prior(self) -> _Choices:
        positions = self.max_gates
        return _Choices(
            length=np.full(positions, 1.0 / positions),
            kind=np.full((positions, len(GENE_KINDS)), 1.0 / len(GENE_KINDS)),
            reuse=np.full(positions, self.reuse_prob),
        )

    def _fit(self, genomes: list[Genome]) -> _Choices:
        prior = self.prior()
        w = self.prior_weight
        length = prior.length * w * len(prior.length)
        kind = prior.kind * w * len(GENE_KINDS)
        reuse_hits = prior.reuse * w
        reuse_total = np.full(len(prior.reuse), w)
        for g in genomes:
            if g.slots:
                length[len(g.slots) - 1] += 1.0
            for pos, slot in enumerate(g.slots):
                kind[pos, _KIND_INDEX[slot.kind]] += 1.0
                for choice in slot.params:
                    reuse_total[pos] += 1.0
                    reuse_hits[pos] += choice != FRESH
        return _Choices(
            length=length / length.sum(),
            kind=kind / kind.sum(axis=1, keepdims=True),
            reuse=reuse_hits / reuse_total,
        )

    def _split(self) -> tuple[list[Genome], list[Genome]]:
        ranked = sorted(
            range(len(self.observations)),
            key=lambda i: (_finite(self.observations[i][1]), i),
        )
        n_good = max(1, int(math.ceil(self.gamma * len(ranked))))
        good = [self.observations[i][0] for i in ranked[:n_good]]
        rest = [self.observations[i][0] for i in ranked[n_good:]]
        return good, rest

    def propose(self, rng: np.random.Generator) -> Genome:
        if not self.enabled or len(self.observations) < self.n_startup:
            return sample_genome(self.num_qubits, self.prior(), rng)
        good, rest = self._split()
        l_dist, g_dist = self._fit(good), self._fit(rest)
        best, best_score = None, -math.inf
        for _ in range(self.n_candidates):
            cand = sample_genome(self.num_qubits, l_dist, rng)
            score = _log_likelihood(cand, l_dist) - _log_likelihood(cand, g_dist)
            if score > best_score:
                best, best_score = cand, score
        return best


def _finite(x: float) -> float:
    return x if math.isfinite(x) else 1e300


def _log_likelihood(genome: Genome, dist: _Choices) -> float:
    ll = math.log(dist.length[len(genome.slots) - 1]) if genome.slots else 0.0
    for pos, slot in enumerate(genome.slots):
        ll += math.log(dist.kind[pos, _KIND_INDEX[slot.kind]])
        for choice in slot.params:
            p = dist.reuse[pos]
            ll += math.log(p if choice != FRESH else 1.0 - p)
    return ll


def sample_genome(num_qubits: int, dist: _Choices, rng: np.random.Generator, max_tries: int = 20) -> Genome:
    """Draw a cap-satisfying genome.

    Kinds and lengths follow ``dist``; operands are uniform without
    replacement.  A slot that would break the depth cap is redrawn up to
    ``max_tries`` times and the genome ends early if none fits.
    """
    params_max, depth_max, _ = num_qubits, 3 * num_qubits, 5 * num_qubits
    length = int(rng.choice(len(dist.length), p=dist.length)) + 1
    front = [0] * num_qubits
    fresh = 0
    slots = []
    for pos in range(length):
        for _ in range(max_tries):
            kind = GENE_KINDS[int(rng.choice(len(GENE_KINDS), p=dist.kind[pos]))]
            if kind.arity > num_qubits:
                continue
            qubits = tuple(int(q) for q in rng.choice(num_qubits, size=kind.arity, replace=False))
            layer = max(front[q] for q in qubits) + 1
            if layer > depth_max:
                continue
            choices = []
            new = fresh
            for _ in range(kind.num_params):
                must_reuse = new >= params_max
                if new > 0 and (must_reuse or rng.random() < dist.reuse[pos]):
                    choices.append(int(rng.integers(new)))
                elif not must_reuse:
                    choices.append(FRESH)
                    new += 1
                else:
                    choices = None
                    break
            if choices is None:
                continue
            fresh = new
            for q in qubits:
                front[q] = layer
            slots.append(Slot(kind, qubits, tuple(choices)))
            break
    return Genome(num_qubits, tuple(slots))


def propose(surrogate: TpeSurrogate, rng: np.random.Generator) -> Genome:
    """Next genome from the surrogate (uniform grammar in random mode or during startup)."""
    return surrogate.propose(rng)


# ---------------------------------------------------------------------------
# Search loop


@dataclass(frozen=True)
class SearchConfig:
    num_qubits: int = 2
    num_trials: int = 2000
    max_duplicates: int = 10
    budget: SamplingBudget = SamplingBudget()
    thresholds: ThresholdSet | None = None
    architecture: str = "regular"
    seed: int = 0
    mode: str = "tpe"
    gamma: float = 0.2
    n_startup: int = 20
    n_candidates: int = 24
    reuse_prob: float = 0.3
    num_classes: int = 4

    def __post_init__(self):
        if self.num_trials < 1:
            raise ValueError("num_trials must be at least 1")
        if self.num_qubits < 2:
            raise ValueError("the search needs at least two qubits")
        if self.architecture not in ("hybrid", "regular"):
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.mode not in ("tpe", "random"):
            raise ValueError(f"unknown search mode {self.mode!r}")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    genome_hash: str
    status: str  # "evaluated" or "skipped-duplicate"
    l_pqc: float
    expr: float
    entgl: float
    params: int
    depth: int
    gates: int
    best_so_far: float
    wall_time: float

    def to_json(self) -> str:
        doc = asdict(self)
        for key in ("l_pqc", "expr", "entgl", "best_so_far"):
            if not math.isfinite(doc[key]):
                doc[key] = str(doc[key])
        return json.dumps(doc)

    def key(self) -> tuple:
        """All fields except the wall time (used to compare runs)."""
        doc = asdict(self)
        doc.pop("wall_time")
        return tuple(str(v) for v in doc.values())


@dataclass
class TrialLog:
    records: list[TrialRecord] = field(default_factory=list)

    def append(self, record: TrialRecord) -> None:
        self.records.append(record)

    def __iter__(self) -> Iterator[TrialRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def to_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    def same_trials(self, other: "TrialLog") -> bool:
        """True when both logs agree on every field except wall time."""
        return [r.key() for r in self] == [r.key() for r in other]


@dataclass(frozen=True)
class SearchResult:
    ranked: list[tuple[ParameterizedCircuit, TrialRecord]]
    log: TrialLog

    @property
    def best(self) -> tuple[ParameterizedCircuit, TrialRecord]:
        return self.ranked[0]


def run_search(config: SearchConfig, log_stream=None) -> SearchResult:
    """Propose, evaluate and rank ``config.num_trials`` genomes.

    Duplicates (same decoded circuit) are evaluated at most
    ``max_duplicates`` times; later copies are logged and skipped.  The
    metric sampling seed is fixed by ``config.budget``, so a repeated circuit
    gets the same report, which is reused instead of recomputed.  Ranking is
    by L_PQC, then fewer parameters, fewer gates, lower depth and first
    appearance.
    """
    thresholds = config.thresholds or ThresholdSet.for_qubits(
        config.num_qubits, config.architecture, num_classes=config.num_classes
    )
    surrogate = TpeSurrogate(
        config.num_qubits,
        gamma=config.gamma,
        n_startup=config.n_startup,
        n_candidates=config.n_candidates,
        reuse_prob=config.reuse_prob,
        enabled=config.mode == "tpe",
    )
    rng = np.random.default_rng(config.seed)
    log = TrialLog()
    counts: dict[str, int] = {}
    reports: dict[str, object] = {}
    first: dict[str, tuple[int, ParameterizedCircuit]] = {}
    best = math.inf
    for trial in range(config.num_trials):
        start = time.perf_counter()
        genome = propose(surrogate, rng)
        circuit = decode(genome)
        key = genome_hash(circuit)
        counts[key] = counts.get(key, 0) + 1
        if counts[key] > config.max_duplicates:
            report = reports[key]
            status = "skipped-duplicate"
        else:
            report = reports.get(key)
            if report is None:
                report = evaluate_circuit(
                    circuit, config.architecture, config.budget, thresholds, key, config.num_classes
                )
                reports[key] = report
            status = "evaluated"
            surrogate.observe(genome, report.l_pqc)
            first.setdefault(key, (trial, circuit))
            best = min(best, report.l_pqc)
        params, depth, gates = report.complexity
        record = TrialRecord(
            trial, key, status, report.l_pqc, report.expr_mean, report.entgl_mean,
            params, depth, gates, best, time.perf_counter() - start,
        )
        log.append(record)
        if log_stream is not None:
            log_stream.write(record.to_json() + "\n")

    def rank_key(item):
        key, (trial, _) = item
        r = reports[key]
        params, depth, gates = r.complexity
        return (_finite(r.l_pqc), params, gates, depth, trial)

    ranked = []
    for key, (trial, circuit) in sorted(first.items(), key=rank_key):
        ranked.append((circuit, next(r for r in log if r.genome_hash == key and r.trial == trial)))
    return SearchResult(ranked, log)
