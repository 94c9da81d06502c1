"""Splitting a fixed dose over more views, and narrowing the tilt range.

At a fixed total electron count, adding views past the data-sufficiency
point barely changes the best achievable error; more dose lowers it. A
small missing wedge costs little. Takes a few minutes.

Run:  python demos/04_dose_and_wedge.py [out_dir]
"""

import os
import sys

import numpy as np

from sparsetomo import (PhantomSpec, generate_ptc_like, projections_for_data_count,
                        run_dose_study, run_wedge_study, write_study_csv)

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out"
os.makedirs(out, exist_ok=True)

x = generate_ptc_like(PhantomSpec("ptc-like", 64, seed=0, grad_target=0.06, grad_tol=0.02))
print("data-sufficiency point:", projections_for_data_count(x, 4.0), "views")

# tolerances searched around the noise estimate
factors = tuple(np.geomspace(0.5, 1.6, 6))
dose = run_dose_study(x, [4e4, 1.6e5], [30, 45], eps_factors=factors)
for r in dose:
    print(f"N_e {r.total_counts:8.0f}  N_p {r.n_proj:3d}  optimal RMSE {r.rmse:.4f}")
write_study_csv(dose, os.path.join(out, "dose_study.csv"))

wedge = run_wedge_study(x, 1.6e5, [45, 60, 75, 90], [30], eps_factors=factors)
for r in wedge:
    print(f"theta +-{r.theta_max:4.0f}  optimal RMSE {r.rmse:.4f}")
write_study_csv(wedge, os.path.join(out, "wedge_study.csv"))
