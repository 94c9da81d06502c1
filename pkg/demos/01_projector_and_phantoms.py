"""Build a parallel-beam system matrix, look at its rows and project a phantom.

Run:  python demos/01_projector_and_phantoms.py [out_dir]
"""

import os
import sys

import numpy as np

from sparsetomo import (PhantomSpec, ProjectionGeometry, build_system_matrix,
                        generate_pixel_sparse, generate_ptc_like, gradient_sparsity,
                        make_tilt_schedule, pixel_sparsity, relative_sampling,
                        simulate_ideal_data, sufficient_projection_number, write_image)

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out"
os.makedirs(out, exist_ok=True)

# A 64x64 grid read by a 64-bin detector needs 64 views before the
# system can possibly be determined.
n_suff = sufficient_projection_number(64, 64, 64)
print(f"sufficient projection number for 64x64 with 64 bins: {n_suff}")

# Views are spread evenly over [-90, 90), the upper end excluded.
schedule = make_tilt_schedule(90, 30)
print("first angles:", schedule.angles[:4], "... last:", schedule.angles[-1])
geo = ProjectionGeometry(64, 64, 64, schedule)
A = build_system_matrix(geo)
print(f"A is {A.n_rows} x {A.n_cols}, {A.matrix.nnz} non-zeros, "
      f"mu = {relative_sampling(30, 64, 64, 64):.3f}")

# Row sums are path lengths: the central horizontal ray crosses all 64 pixels.
i0 = int(np.flatnonzero(schedule.angles == 0.0)[0])
pixels, weights = A.row(i0 * 64 + 32)
print(f"ray at 0 degrees, bin 32: {pixels.size} pixels, length {weights.sum():.6f}")

x_sparse = generate_pixel_sparse(PhantomSpec("pixel-sparse", 64, k_target=0.1, seed=1))
x_ptc = generate_ptc_like(PhantomSpec("ptc-like", 64, seed=0, grad_target=0.06,
                                      grad_tol=0.02))
print(f"pixel-sparse phantom: k = {pixel_sparsity(x_sparse):.3f}")
print(f"catalyst-like phantom: gradient sparsity = {gradient_sparsity(x_ptc):.3f}, "
      f"levels {np.unique(x_ptc)}")

b = simulate_ideal_data(A, x_ptc)
print(f"sinogram {b.values.shape}, total signal {b.values.sum():.2f}")
write_image(x_ptc, os.path.join(out, "ptc64.pgm"))
write_image(b.values, os.path.join(out, "ptc64_sinogram.pgm"),
            window=(0.0, float(b.values.max())))
print("images written to", out)
