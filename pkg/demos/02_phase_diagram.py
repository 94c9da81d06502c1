"""A small l1 phase diagram: where does basis pursuit stop recovering?

Pixel-sparse 32x32 objects, ideal data, 4 trials per cell (the acceptance
suite uses 10). Takes about half a minute.

Run:  python demos/02_phase_diagram.py [out_dir]
"""

import os
import sys

import numpy as np

from sparsetomo import PhaseDiagramConfig, extract_transition_boundary, run_phase_diagram
from sparsetomo.fileio import write_study_csv

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out"
os.makedirs(out, exist_ok=True)

ks = (0.05, 0.1, 0.2, 0.35, 0.6, 0.9)
mus = (0.1, 0.2, 0.3, 0.45, 0.6, 0.8)
cfg = PhaseDiagramConfig(grid_size=(32, 32), k_values=ks, mu_values=mus, trials_per_cell=4,
                         base_seed=0)
cells = run_phase_diagram(cfg)

F = np.array([c.fraction for c in cells]).reshape(len(ks), len(mus))
print("recovery fraction, rows k, columns mu =", mus)
for k, row in zip(ks, F):
    print(f"k = {k:4.2f}  " + "  ".join(f"{v:4.2f}" for v in row))

# The sparser the object, the fewer views it takes.
print("50% boundary (k, mu):", extract_transition_boundary(cells, 0.5))
write_study_csv(cells, os.path.join(out, "phase_diagram.csv"))
