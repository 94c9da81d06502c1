"""Sparsity-exploiting tomographic reconstruction and sampling-limit studies.

Parallel-beam projector, pixel-sparse and catalyst-like phantoms, Poisson
dose model, l1 and total-variation constrained solvers, and a study harness
for phase diagrams, data-tolerance sweeps, dose and tilt-range studies.
"""

from .geometry import (ParameterError, ProjectionGeometry, TiltSchedule, make_tilt_schedule,
                       projections_for_sampling, relative_sampling,
                       sufficient_projection_number)
from .l1 import L1Options, solve_l1
from .metrics import (RecoveryRule, gradient_magnitude, gradient_sparsity, is_recovered,
                      pixel_sparsity, rmse)
from .noise import DoseSpec, apply_poisson_dose, expected_noise_norm, measure_snr, \
    simulate_ideal_data
from .phantom import GenerationError, PhantomSpec, generate, generate_pixel_sparse, \
    generate_ptc_like
from .projector import (Sinogram, SystemMatrix, back_project, build_system_matrix,
                        estimate_operator_norm, forward_project)
from .result import ReconResult
from .seeds import derive_seed
from .studies import (PhaseDiagramCell, PhaseDiagramConfig, StudyRecord, SweepPoint,
                      default_epsilon_grid, extract_transition_boundary, flat_fit,
                      projections_for_data_count, run_dose_study, run_epsilon_sweep,
                      run_phase_diagram, run_wedge_study)
from .tv import TvOptions, cosine_alpha, solve_tv_asdpocs, tv_gradient, tv_norm
from .fileio import read_image, write_image, write_study_csv
from .config import ConfigError, RunConfig, parse_config, serialize_config

__version__ = "0.1.0"
