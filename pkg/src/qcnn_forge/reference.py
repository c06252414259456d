"""Published metric tables used as validation targets.

Each row holds ``(params, depth, gates, expr_mean, expr_std, entgl_mean,
entgl_std, l_pqc)``.  ``math.inf`` marks an infinite expressibility.  The
entanglement entry for regular 4-qubit C3 is printed as 1.621 in the source,
which lies outside [0, 1] and is kept verbatim; comparisons skip it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["TableRow", "MetricTable", "TABLES", "TABLE_ALIASES", "resolve_table", "BEST_GRID_MODELS"]


@dataclass(frozen=True)
class TableRow:
    circuit_id: str
    params: int
    depth: int
    gates: int
    expr_mean: float
    expr_std: float
    entgl_mean: float
    entgl_std: float
    l_pqc: float

    @property
    def complexity(self) -> tuple[int, int, int]:
        return self.params, self.depth, self.gates


@dataclass(frozen=True)
class MetricTable:
    key: str
    arch: str
    num_qubits: int
    rows: tuple[TableRow, ...]
    expr_thr: float
    entgl_thr: float

    def row(self, circuit_id: str) -> TableRow:
        for r in self.rows:
            if r.circuit_id == circuit_id:
                return r
        raise KeyError(circuit_id)


def _rows(data):
    return tuple(TableRow(*item) for item in data)


_INF = math.inf

TABLES: dict[str, MetricTable] = {
    "hybrid-2q": MetricTable("hybrid-2q", "hybrid", 2, _rows([
        ("C1", 2, 3, 5, 0.252, 0.31, 0.203, 0.258, 1.664),
        ("C2", 3, 3, 4, 0.005, 0.001, 0.249, 0.003, 1.376),
        ("C3", 4, 3, 5, 0.331, 0.325, 0.501, 0.14, 1.23),
        ("C4", 4, 3, 5, 0.005, 0.001, 0.25, 0.002, 1.375),
        ("C5", 4, 4, 6, 0.002, 0.001, 0.313, 0.002, 1.218),
        ("C6", 6, 4, 6, 0.005, 0.001, 0.214, 0.002, 1.466),
        ("AS", 2, 4, 5, 0.013, 0.012, 0.389, 0.09, 1.028),
    ]), 0.016, 0.4),
    "hybrid-3q": MetricTable("hybrid-3q", "hybrid", 3, _rows([
        ("C1", 3, 4, 8, 0.245, 0.304, 0.324, 0.252, 1.681),
        ("C2", 4, 4, 6, 0.002, 0.001, 0.375, 0.003, 1.438),
        ("C3", 6, 4, 8, 0.241, 0.305, 0.606, 0.08, 1.255),
        ("C4", 6, 5, 9, 0.002, 0.0, 0.375, 0.002, 1.438),
        ("C5", 6, 8, 12, 0.253, 0.006, 0.626, 0.002, 1.234),
        ("C6", 12, 8, 12, 0.0, 0.0, 0.397, 0.002, 1.405),
        ("AS", 3, 3, 5, 0.11, 0.223, 0.758, 0.1, 1.069),
    ]), 0.016, 0.667),
    "hybrid-4q": MetricTable("hybrid-4q", "hybrid", 4, _rows([
        ("C1", 4, 5, 11, 0.252, 0.306, 0.319, 0.219, 1.784),
        ("C2", 7, 5, 10, 0.021, 0.002, 0.367, 0.002, 1.558),
        ("C3", 8, 5, 11, 0.249, 0.307, 0.677, 0.062, 1.348),
        ("C4", 8, 6, 12, 0.002, 0.001, 0.375, 0.002, 1.545),
        ("C5", 8, 9, 16, 0.348, 0.005, 0.711, 0.001, 1.379),
        ("AS", 2, 3, 7, 0.006, 0.005, 0.859, 0.017, 0.37),
    ]), 0.016, 0.824),
    "hybrid-9q": MetricTable("hybrid-9q", "hybrid", 9, _rows([
        ("C1", 9, 10, 26, 0.25, 0.306, 0.371, 0.153, 1.798),
        ("C2", 16, 8, 24, 0.204, 0.005, 0.435, 0.001, 1.7),
        ("C3", 18, 10, 26, 0.232, 0.299, 0.776, 0.031, 1.376),
        ("C4", 18, 11, 27, 0.002, 0.001, 0.375, 0.001, 1.623),
        ("C5", 18, 13, 36, 0.421, 0.004, 0.763, 0.001, 1.528),
        ("AS", 9, 9, 20, 0.002, 0.001, 0.962, 0.002, 1.032),
    ]), 0.016, 0.994),
    "regular-2q": MetricTable("regular-2q", "regular", 2, _rows([
        ("C1", 2, 3, 5, 0.734, 0.758, 1.0, 0.0, 1.055),
        ("C2", 3, 3, 4, 0.127, 0.137, 0.252, 0.001, 1.378),
        ("C3", 4, 3, 5, 0.035, 0.033, 0.371, 0.001, 1.073),
        ("C4", 4, 3, 5, 0.035, 0.033, 0.251, 0.001, 1.373),
        ("C5", 4, 4, 6, 0.033, 0.032, 0.318, 0.006, 1.206),
        ("C6", 6, 4, 6, 0.011, 0.005, 0.212, 0.003, 1.471),
        ("AS", 2, 6, 8, 0.096, 0.043, 0.407, 0.001, 1.006),
    ]), 0.021, 0.4),
    "regular-3q": MetricTable("regular-3q", "regular", 3, _rows([
        ("C1", 3, 4, 8, 0.601, 0.332, 1.0, 0.0, 1.019),
        ("C2", 4, 4, 6, 0.17, 0.128, 0.377, 0.0, 1.439),
        ("C3", 6, 4, 8, 0.017, 0.013, 0.531, 0.006, 1.203),
        ("C4", 6, 5, 9, 0.046, 0.05, 0.376, 0.001, 1.439),
        ("C5", 6, 8, 12, 0.135, 0.142, 0.627, 0.002, 1.063),
        ("C6", 12, 8, 12, 0.006, 0.001, 0.395, 0.002, 1.407),
        ("AS", 3, 6, 10, 0.072, 0.015, 0.888, 0.0, 1.002),
    ]), 0.02, 0.667),
    "regular-4q": MetricTable("regular-4q", "regular", 4, _rows([
        ("C1", 4, 5, 11, 0.55, 0.207, 1.0, 0.0, 1.008),
        ("C2", 7, 5, 10, 0.019, 0.014, 0.367, 0.003, 1.554),
        ("C3", 8, 5, 11, 0.007, 0.002, 1.621, 0.002, 1.246),
        ("C4", 8, 6, 12, 0.048, 0.033, 0.372, 0.002, 1.549),
        ("C5", 8, 9, 16, 0.01, 0.004, 0.713, 0.001, 1.134),
        ("AS", 4, 8, 19, 0.039, 0.012, 0.874, 0.0, 1.0),
    ]), 0.019, 0.824),
    "regular-9q": MetricTable("regular-9q", "regular", 9, _rows([
        ("C1", 9, 10, 26, _INF, math.nan, 1.0, 0.0, _INF),
        ("C2", 16, 8, 24, 0.005, 0.002, 0.435, 0.002, 1.562),
        ("C3", 18, 10, 26, 0.001, 0.001, 0.792, 0.001, 1.203),
        ("C4", 18, 11, 27, 0.001, 0.001, 0.377, 0.001, 1.621),
        ("C5", 18, 13, 36, 0.001, 0.001, 0.762, 0.001, 1.234),
        ("AS", 9, 18, 45, 0.047, 0.006, 1.0, 0.0, 1.0),
    ]), 0.013, 0.994),
}

# Short ids: s1 and s2 both name the hybrid 2-qubit table, s3..s5 the other
# hybrid tables and s6..s9 the regular tables.
TABLE_ALIASES = {
    "s1": "hybrid-2q",
    "s2": "hybrid-2q",
    "s3": "hybrid-3q",
    "s4": "hybrid-4q",
    "s5": "hybrid-9q",
    "s6": "regular-2q",
    "s7": "regular-3q",
    "s8": "regular-4q",
    "s9": "regular-9q",
}


def resolve_table(name: str) -> MetricTable:
    key = TABLE_ALIASES.get(name.lower(), name.lower())
    if key not in TABLES:
        raise KeyError(f"unknown table {name!r}")
    return TABLES[key]


# Best grid-search models and their reported test accuracy (percent).
BEST_GRID_MODELS = {
    1: ("Rx-Ry-Rz-Rx-Ry -> U3", 51.35),
    4: ("U3-U3-U3-U3 -> C5", 61.37),
    16: ("U3-U3-U3 -> Pool-C2", 71.79),
}
