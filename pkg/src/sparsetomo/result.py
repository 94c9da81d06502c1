from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ReconResult:
    """Solver output.

    ``diagnostics`` maps a quantity name to its per-iteration trace; every
    trace has ``iterations`` entries.
    """

    image: np.ndarray
    iterations: int
    residual_norm: float
    objective: float
    converged: bool
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)

    def write_diagnostics_csv(self, path, columns=None) -> None:
        """One row per iteration, values with 9 significant digits."""
        columns = list(columns or self.diagnostics)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", *columns])
            for i in range(self.iterations):
                row = [format(float(self.diagnostics[c][i]), ".9g") for c in columns]
                writer.writerow([i + 1, *row])
