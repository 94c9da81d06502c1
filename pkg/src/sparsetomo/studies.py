"""Study harness: phase diagrams, data-tolerance sweeps, dose and tilt-range studies.

All randomness comes from :func:`sparsetomo.seeds.derive_seed`, so results
do not depend on the thread count or on the order tasks finish in.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import ClassVar, Sequence

import numpy as np

from .geometry import (ParameterError, ProjectionGeometry, make_tilt_schedule,
                       projections_for_sampling)
from .l1 import L1Options, solve_l1
from .metrics import RecoveryRule, gradient_magnitude, rmse
from .noise import DoseSpec, apply_poisson_dose, expected_noise_norm, simulate_ideal_data
from .phantom import GenerationError, PhantomSpec, generate_pixel_sparse
from .projector import (Sinogram, SystemMatrix, _as_data_vector, build_system_matrix,
                        estimate_operator_norm)
from .seeds import derive_seed
from .tv import TvOptions, solve_tv_asdpocs

# default data-tolerance grid, as multiples of the estimated noise norm
DEFAULT_EPS_FACTORS = tuple(np.geomspace(1e-3, 3.0, 12))
# failures that mark a single trial or dataset as unsuccessful; anything
# else is a bug and propagates
TRIAL_FAILURES = (GenerationError, ParameterError, FloatingPointError,
                  np.linalg.LinAlgError)

# solver defaults sized for desk-scale sweeps
PHASE_L1_OPTIONS = L1Options(nonneg=True, max_iters=3000, tol_primal=1e-5, tol_dual=1e-5)
STUDY_TV_OPTIONS = TvOptions(max_iters=2000)


def _map(fn, items, threads):
    """``list(map(fn, items))``, optionally on a thread pool; order is preserved."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def square_geometry(size: tuple[int, int], theta_max: float, n_proj: int,
                    n_det: int | None = None) -> ProjectionGeometry:
    h, w = size
    return ProjectionGeometry(w, h, n_det or w, make_tilt_schedule(theta_max, n_proj))


# -- phase diagram ---------------------------------------------------------

@dataclass(frozen=True)
class PhaseDiagramConfig:
    grid_size: tuple[int, int] = (32, 32)
    k_values: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    mu_values: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
    trials_per_cell: int = 10
    n_det: int | None = None
    rule: RecoveryRule = RecoveryRule()
    # total counts per trial; None means ideal data
    noise: DoseSpec | None = None
    theta_max: float = 90.0
    base_seed: int = 0
    l1: L1Options = PHASE_L1_OPTIONS
    eps_factors: tuple[float, ...] = DEFAULT_EPS_FACTORS

    def __post_init__(self):
        size = self.grid_size
        if np.isscalar(size):
            size = (int(size), int(size))
        object.__setattr__(self, "grid_size", tuple(int(s) for s in size))
        object.__setattr__(self, "k_values", tuple(float(k) for k in self.k_values))
        object.__setattr__(self, "mu_values", tuple(float(m) for m in self.mu_values))
        if not self.k_values or not self.mu_values:
            raise ParameterError("k_values and mu_values must be non-empty")
        if any(not 0 < k <= 1 for k in self.k_values):
            raise ParameterError("k_values must lie in (0, 1]")
        if any(not m > 0 for m in self.mu_values):
            raise ParameterError("mu_values must be positive")
        if self.trials_per_cell < 1:
            raise ParameterError("trials_per_cell must be >= 1")
        if not 0 < self.theta_max <= 90:
            raise ParameterError("theta_max must lie in (0, 90]")


@dataclass(frozen=True)
class PhaseDiagramCell:
    k: float
    mu: float
    n_proj: int
    n_trials: int
    n_recovered: int

    CSV_COLUMNS: ClassVar[tuple[str, ...]] = ("k", "mu", "n_proj", "n_trials",
                                              "n_recovered", "fraction")

    @property
    def fraction(self) -> float:
        return self.n_recovered / self.n_trials


def _phase_trial(cfg: PhaseDiagramConfig, A: SystemMatrix, norm: float,
                 ik: int, imu: int, trial: int) -> bool:
    h, w = cfg.grid_size
    seed = derive_seed(cfg.base_seed, "phantom", ik, imu, trial)
    x_true = generate_pixel_sparse(PhantomSpec("pixel-sparse", (h, w), cfg.k_values[ik], seed))
    b = simulate_ideal_data(A, x_true)
    if cfg.noise is None:
        res = solve_l1(A, b, replace(cfg.l1, epsilon=0.0), norm=norm)
        return rmse(res.image, x_true) <= cfg.rule.rmse_threshold
    if not np.any(b.values > 0):
        # nothing to dose; the zero image is exact
        return rmse(np.zeros_like(x_true), x_true) <= cfg.rule.rmse_threshold
    noise_seed = derive_seed(cfg.base_seed, "noise", ik, imu, trial)
    b_noisy = apply_poisson_dose(b, DoseSpec(cfg.noise.total_counts, noise_seed))
    eps_grid = default_epsilon_grid(b_noisy, cfg.eps_factors)
    _, best = run_epsilon_sweep(A, b_noisy, x_true, eps_grid, "l1", cfg.l1, norm=norm)
    return best.rmse <= cfg.rule.rmse_threshold


def run_phase_diagram(cfg: PhaseDiagramConfig, threads: int = 1) -> list[PhaseDiagramCell]:
    """Recovery fraction of basis pursuit over a (k, mu) grid.

    Cells are returned k-major in the order of ``cfg.k_values`` and
    ``cfg.mu_values``. A trial whose phantom or solve raises counts as not
    recovered.
    """
    h, w = cfg.grid_size
    n_det = cfg.n_det or w
    mats = {}
    for mu in cfg.mu_values:
        n_proj = projections_for_sampling(mu, w, h, n_det)
        if n_proj not in mats:
            A = build_system_matrix(square_geometry((h, w), cfg.theta_max, n_proj, n_det))
            mats[n_proj] = (A, estimate_operator_norm(A, cfg.l1.norm_iters, cfg.l1.seed))

    tasks = [(ik, imu, t) for ik in range(len(cfg.k_values))
             for imu in range(len(cfg.mu_values)) for t in range(cfg.trials_per_cell)]

    def work(task):
        ik, imu, t = task
        A, norm = mats[projections_for_sampling(cfg.mu_values[imu], w, h, n_det)]
        try:
            return _phase_trial(cfg, A, norm, ik, imu, t)
        except TRIAL_FAILURES:
            return False

    ok = _map(work, tasks, threads)
    cells = []
    for ik, k in enumerate(cfg.k_values):
        for imu, mu in enumerate(cfg.mu_values):
            start = (ik * len(cfg.mu_values) + imu) * cfg.trials_per_cell
            hits = sum(ok[start:start + cfg.trials_per_cell])
            cells.append(PhaseDiagramCell(k, mu, projections_for_sampling(mu, w, h, n_det),
                                          cfg.trials_per_cell, int(hits)))
    return cells


def extract_transition_boundary(cells: Sequence[PhaseDiagramCell],
                                level: float = 0.5) -> list[tuple[float, float]]:
    """For each k, the smallest mu whose recovery fraction reaches ``level``.

    Values of k with no qualifying mu are left out. Raises
    :class:`ParameterError` unless the cells form a complete rectangular
    (k, mu) grid without duplicates.
    """
    ks = sorted({c.k for c in cells})
    mus = sorted({c.mu for c in cells})
    table = {}
    for c in cells:
        if (c.k, c.mu) in table:
            raise ParameterError(f"duplicate cell at k={c.k}, mu={c.mu}")
        table[(c.k, c.mu)] = c
    if len(table) != len(ks) * len(mus):
        raise ParameterError("cells do not form a complete (k, mu) grid")
    boundary = []
    for k in ks:
        for mu in mus:
            if table[(k, mu)].fraction >= level:
                boundary.append((k, mu))
                break
    return boundary


# -- data-tolerance sweeps -------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    epsilon: float
    rmse: float
    converged: bool
    iterations: int
    residual: float


# columns written by write_study_csv; wall_time is opt-in since it varies run to run
RECORD_COLUMNS = ("study", "n_proj", "total_counts", "theta_max", "epsilon", "rmse",
                  "converged", "iterations", "seed")


@dataclass(frozen=True)
class StudyRecord:
    """Best reconstruction of one dataset over an epsilon sweep."""

    study: str
    n_proj: int
    total_counts: float
    theta_max: float
    epsilon: float
    rmse: float
    converged: bool
    iterations: int
    seed: int
    wall_time: float = field(default=0.0, compare=False)
    curve: tuple[SweepPoint, ...] = field(default=(), repr=False, compare=False)

    CSV_COLUMNS: ClassVar[tuple[str, ...]] = RECORD_COLUMNS


def default_epsilon_grid(b_noisy: Sinogram,
                         factors: Sequence[float] = DEFAULT_EPS_FACTORS) -> np.ndarray:
    """Log-spaced tolerances scaled by the Poisson estimate of the noise norm."""
    scale = expected_noise_norm(b_noisy)
    if not scale > 0:
        raise ParameterError("noise estimate is zero; pass an explicit eps_grid")
    return scale * np.asarray(factors, dtype=float)


def flat_fit(A: SystemMatrix, b) -> tuple[float, float]:
    """Least-squares constant image ``c`` for data ``b`` and its residual norm.

    ``c = <A 1, b> / ||A 1||^2``; any tolerance at or above the residual
    admits this zero-TV image.
    """
    bvec = _as_data_vector(A, b)
    a1 = A.matrix @ np.ones(A.n_cols)
    denom = float(a1 @ a1)
    c = float(a1 @ bvec) / denom if denom > 0 else 0.0
    return c, float(np.linalg.norm(c * a1 - bvec))


def run_epsilon_sweep(A: SystemMatrix, b_noisy, x_true: np.ndarray, eps_grid,
                      solver: str = "tv", opts=None, threads: int = 1, norm=None,
                      study: str = "eps-sweep", seed: int = 0
                      ) -> tuple[list[SweepPoint], StudyRecord]:
    """Reconstruct once per tolerance and keep the lowest-RMSE result.

    Parameters
    ----------
    eps_grid : sequence of float
        Positive, strictly increasing tolerances.
    solver : {"tv", "l1"}
        ASD-POCS or the l1 primal-dual solver; ``opts`` are the matching
        options with ``epsilon`` overwritten per point.

    Returns
    -------
    curve : list of SweepPoint
        One point per tolerance; unconverged runs are kept and flagged.
    best : StudyRecord
        The arg-min point; ties go to the smaller tolerance.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.ndim != 1 or eps_grid.size == 0:
        raise ParameterError("eps_grid must be a non-empty 1D sequence")
    if np.any(eps_grid <= 0) or np.any(np.diff(eps_grid) <= 0):
        raise ParameterError("eps_grid must be positive and strictly increasing")
    if solver == "tv":
        opts = STUDY_TV_OPTIONS if opts is None else opts
        solve = lambda eps: solve_tv_asdpocs(A, b_noisy, replace(opts, epsilon=eps))
    elif solver == "l1":
        opts = L1Options() if opts is None else opts
        if norm is None:
            norm = estimate_operator_norm(A, opts.norm_iters, opts.seed)
        solve = lambda eps: solve_l1(A, b_noisy, replace(opts, epsilon=eps), norm=norm)
    else:
        raise ParameterError(f"solver must be 'tv' or 'l1', got {solver!r}")

    def work(eps):
        res = solve(float(eps))
        return SweepPoint(float(eps), rmse(res.image, x_true), bool(res.converged),
                          int(res.iterations), float(res.residual_norm))

    t0 = time.perf_counter()
    curve = _map(work, eps_grid, threads)
    best = min(curve, key=lambda p: p.rmse)
    dose = getattr(b_noisy, "dose", None)
    geo = A.geometry
    record = StudyRecord(study, geo.schedule.n_proj, float(dose) if dose else 0.0,
                         geo.schedule.theta_max, best.epsilon, best.rmse, best.converged,
                         best.iterations, int(seed), time.perf_counter() - t0, tuple(curve))
    return curve, record


# -- dose and tilt-range studies -------------------------------------------

def projections_for_data_count(x: np.ndarray, factor: float = 4.0, theta_max: float = 90.0,
                               n_det: int | None = None, max_proj: int = 1024) -> int:
    """Smallest N_p whose ideal data hold ``factor`` times as many non-zero
    values as ``x`` has non-zero gradient-magnitude pixels."""
    need = factor * np.count_nonzero(gradient_magnitude(x))
    for n_proj in range(1, max_proj + 1):
        A = build_system_matrix(square_geometry(x.shape, theta_max, n_proj, n_det))
        if np.count_nonzero(A.matrix @ x.ravel()) >= need:
            return n_proj
    raise ParameterError(f"no projection count up to {max_proj} reaches the data target")


def _noisy_dataset_record(x_true, theta_max, n_proj, total_counts, n_det, eps_grid,
                          eps_factors, opts, base_seed, study, threads):
    A = build_system_matrix(square_geometry(x_true.shape, theta_max, n_proj, n_det))
    b = simulate_ideal_data(A, x_true)
    # theta is not part of the seed, so the full-range rows of the dose and
    # tilt-range studies draw identical noise
    seed = derive_seed(base_seed, "noise", int(round(total_counts)), n_proj)
    try:
        b_noisy = apply_poisson_dose(b, DoseSpec(total_counts, seed))
        grid = default_epsilon_grid(b_noisy, eps_factors) if eps_grid is None else eps_grid
        _, rec = run_epsilon_sweep(A, b_noisy, x_true, grid, "tv", opts, threads,
                                   study=study, seed=seed)
        return rec
    except TRIAL_FAILURES:
        return StudyRecord(study, n_proj, float(total_counts), float(theta_max),
                           float("nan"), float("nan"), False, 0, seed)


def run_dose_study(phantom: np.ndarray, total_counts_values: Sequence[float],
                   n_proj_values: Sequence[int], theta_max: float = 90.0, eps_grid=None,
                   opts: TvOptions = STUDY_TV_OPTIONS, base_seed: int = 0,
                   eps_factors: Sequence[float] = DEFAULT_EPS_FACTORS,
                   n_det: int | None = None, threads: int = 1) -> list[StudyRecord]:
    """Optimal TV reconstruction error for each (N_e, N_p) pair.

    ``eps_grid`` fixes absolute tolerances for every dataset; with ``None``
    each dataset uses ``eps_factors`` times its noise estimate. Records
    come back N_e-major. A dataset that fails is recorded with NaN error
    and ``converged=False``.
    """
    if len(total_counts_values) == 0 or len(n_proj_values) == 0:
        raise ParameterError("total_counts_values and n_proj_values must be non-empty")
    return [_noisy_dataset_record(np.asarray(phantom, float), theta_max, int(n_p), float(ne),
                                  n_det, eps_grid, eps_factors, opts, base_seed, "dose-study",
                                  threads)
            for ne in total_counts_values for n_p in n_proj_values]


def run_wedge_study(phantom: np.ndarray, total_counts: float, theta_values: Sequence[float],
                    n_proj_values: Sequence[int], eps_grid=None,
                    opts: TvOptions = STUDY_TV_OPTIONS, base_seed: int = 0,
                    eps_factors: Sequence[float] = DEFAULT_EPS_FACTORS,
                    n_det: int | None = None, threads: int = 1) -> list[StudyRecord]:
    """As :func:`run_dose_study` with the dose fixed and the tilt range varied.

    Records come back theta-major.
    """
    if len(theta_values) == 0 or len(n_proj_values) == 0:
        raise ParameterError("theta_values and n_proj_values must be non-empty")
    for theta in theta_values:
        if not 0 < theta <= 90:
            raise ParameterError(f"theta values must lie in (0, 90], got {theta}")
    return [_noisy_dataset_record(np.asarray(phantom, float), float(th), int(n_p),
                                  float(total_counts), n_det, eps_grid, eps_factors, opts,
                                  base_seed, "wedge-study", threads)
            for th in theta_values for n_p in n_proj_values]
