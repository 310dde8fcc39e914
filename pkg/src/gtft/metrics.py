"""Per-iteration metric traces and their CSV form."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

OPTIMIZE_COLUMNS = ("iter", "objective", "grad_mean_sq", "grad_at_mean_sq", "consensus_error")
CONSENSUS_COLUMNS = ("iter", "consensus_error")


@dataclass
class MetricsTrace:
    """Rows of metrics, one per iteration, in ``columns`` order.

    ``extras`` carries run metadata and optional diagnostics (not written to CSV).
    """

    columns: tuple[str, ...] = OPTIMIZE_COLUMNS
    values: np.ndarray = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values is None:
            self.values = np.empty((0, len(self.columns)))
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1, len(self.columns))

    def __len__(self):
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def final(self, name: str) -> float:
        return float(self.column(name)[-1])

    def narrow(self, columns) -> MetricsTrace:
        idx = [self.columns.index(c) for c in columns]
        return MetricsTrace(tuple(columns), self.values[:, idx], dict(self.extras))


def write_metrics_csv(trace: MetricsTrace, path) -> None:
    """Header row then one row per iteration; floats with 17 significant digits."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace.columns)
        for row in trace.values:
            w.writerow([str(int(v)) if c == "iter" else f"{v:.17g}" for c, v in zip(trace.columns, row)])


def read_metrics_csv(path) -> MetricsTrace:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    columns = tuple(rows[0])
    values = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(columns))
    return MetricsTrace(columns, values)
