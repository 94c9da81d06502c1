"""Total-variation reconstruction of a catalyst-like object.

First with ideal data and just enough views for the data count to reach four
times the gradient sparsity, then with Poisson noise over a range of data
tolerances. Takes about a minute.

Run:  python demos/03_tv_recovery_and_sweep.py [out_dir]
"""

import os
import sys

import numpy as np

from sparsetomo import (DoseSpec, PhantomSpec, TvOptions, apply_poisson_dose,
                        build_system_matrix, default_epsilon_grid, expected_noise_norm,
                        generate_ptc_like, gradient_sparsity, measure_snr,
                        projections_for_data_count, rmse, run_epsilon_sweep,
                        simulate_ideal_data, solve_tv_asdpocs, write_image)
from sparsetomo.studies import square_geometry

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out"
os.makedirs(out, exist_ok=True)

x = generate_ptc_like(PhantomSpec("ptc-like", 64, seed=0, grad_target=0.06, grad_tol=0.02))
n_p = projections_for_data_count(x, 4.0)
print(f"gradient sparsity {gradient_sparsity(x):.3f}; {n_p} views give 4x as many "
      "non-zero measurements")

A = build_system_matrix(square_geometry(x.shape, 90, n_p))
b = simulate_ideal_data(A, x)
res = solve_tv_asdpocs(A, b, TvOptions(epsilon=1e-5, max_iters=5000))
print(f"ideal data: RMSE {rmse(res.image, x):.4f} after {res.iterations} iterations "
      f"(converged: {res.converged})")
write_image(res.image, os.path.join(out, "tv_ideal.pgm"))

# Noisy data: too small a tolerance fits the noise, too large a one washes
# the object out. The best tolerance sits near the noise norm.
A = build_system_matrix(square_geometry(x.shape, 90, 30))
b = simulate_ideal_data(A, x)
bn = apply_poisson_dose(b, DoseSpec(4e4, seed=2))
print(f"N_e = 4e4 over 30 views: SNR {measure_snr(b, bn):.1f}, "
      f"noise-norm estimate {expected_noise_norm(bn):.3f}")
grid = default_epsilon_grid(bn, np.geomspace(0.05, 3.0, 8))
curve, best = run_epsilon_sweep(A, bn, x, grid, "tv", TvOptions(max_iters=2000))
for p in curve:
    mark = " <- best" if p.epsilon == best.epsilon else ""
    print(f"  eps {p.epsilon:8.3f}  RMSE {p.rmse:.4f}  converged {p.converged}{mark}")
