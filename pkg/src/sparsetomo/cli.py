"""Command-line front end.

    sparsetomo <subcommand> [--config FILE] [--seed N] [--out DIR] [--threads N]

Exit status is 0 on success, 2 for invalid arguments or configuration, 3
for file-system errors and 4 when a phantom cannot be generated.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .config import SUBCOMMANDS, ConfigError, RunConfig, parse_config, serialize_config
from .fileio import write_image, write_rows, write_study_csv
from .geometry import ParameterError
from .l1 import L1Options, solve_l1
from .metrics import RecoveryRule, rmse
from .noise import DoseSpec, apply_poisson_dose, simulate_ideal_data
from .phantom import GenerationError, PhantomSpec, generate
from .projector import build_system_matrix
from .seeds import derive_seed
from .studies import (DEFAULT_EPS_FACTORS, PHASE_L1_OPTIONS, STUDY_TV_OPTIONS,
                      PhaseDiagramConfig,
                      StudyRecord, default_epsilon_grid, extract_transition_boundary,
                      run_dose_study, run_epsilon_sweep, run_phase_diagram, run_wedge_study,
                      square_geometry)
from .tv import TvOptions, solve_tv_asdpocs

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_GENERATION = 0, 2, 3, 4


def _phantom(cfg: RunConfig) -> np.ndarray:
    spec = PhantomSpec(cfg["phantom_kind"], cfg["size"], cfg["k_target"],
                       derive_seed(cfg["base_seed"], "object"), cfg["carbon_level"],
                       cfg["particle_level"], cfg["grad_target"], cfg["grad_tol"])
    return generate(spec)


def _tv_options(cfg: RunConfig, epsilon: float | None = None, study: bool = False) -> TvOptions:
    max_iters = cfg["max_iters"] or (STUDY_TV_OPTIONS.max_iters if study else TvOptions.max_iters)
    return TvOptions(epsilon=cfg["epsilon"] if epsilon is None else epsilon,
                     beta0=cfg["beta0"], beta_red=cfg["beta_red"],
                     n_tv_steps=cfg["n_tv_steps"], alpha0=cfg["alpha0"],
                     alpha_red=cfg["alpha_red"], r_max=cfg["r_max"], delta=cfg["delta"],
                     c_alpha_stop=cfg["c_alpha_stop"], resid_rel_stop=cfg["resid_rel_stop"],
                     max_iters=max_iters)


def _l1_options(cfg: RunConfig, epsilon: float | None = None,
                max_iters: int = L1Options.max_iters) -> L1Options:
    return L1Options(epsilon=cfg["epsilon"] if epsilon is None else epsilon,
                     nonneg=cfg["nonneg"], max_iters=cfg["max_iters"] or max_iters,
                     tol_primal=cfg["tol_primal"], tol_dual=cfg["tol_dual"],
                     seed=cfg["base_seed"])


def _dataset(cfg: RunConfig, x):
    A = build_system_matrix(square_geometry(x.shape, cfg["theta_max"], cfg["n_proj"],
                                            cfg["n_det"]))
    b = simulate_ideal_data(A, x)
    seed = 0
    if cfg["total_counts"] is not None:
        seed = derive_seed(cfg["base_seed"], "noise", int(round(cfg["total_counts"])),
                           cfg["n_proj"])
        b = apply_poisson_dose(b, DoseSpec(cfg["total_counts"], seed))
    return A, b, seed


def _eps_grid(cfg: RunConfig, b):
    if cfg["eps_values"] is not None:
        return np.asarray(cfg["eps_values"])
    if b.dose is None:
        raise ConfigError("config key 'eps_values': required for ideal data "
                          "(set total_counts or list explicit tolerances)")
    return default_epsilon_grid(b, cfg["eps_factors"] or DEFAULT_EPS_FACTORS)


def _window(cfg):
    return (cfg["window_lo"], cfg["window_hi"])


def cmd_phantom(cfg: RunConfig, out: str) -> None:
    x = _phantom(cfg)
    write_image(x, os.path.join(out, "phantom.pgm"), _window(cfg), cfg["pgm_ascii"])
    np.save(os.path.join(out, "phantom.npy"), x)


def cmd_project(cfg: RunConfig, out: str) -> None:
    x = _phantom(cfg)
    _, b, _ = _dataset(cfg, x)
    np.save(os.path.join(out, "sinogram.npy"), b.values)
    header = [f"bin{k}" for k in range(b.n_det)]
    write_rows(os.path.join(out, "sinogram.csv"), ["angle", *header],
               ([ang, *row] for ang, row in zip(
                   square_geometry(x.shape, cfg["theta_max"], cfg["n_proj"]).schedule.angles,
                   b.values)))


def cmd_reconstruct(cfg: RunConfig, out: str) -> None:
    x = _phantom(cfg)
    A, b, seed = _dataset(cfg, x)
    if cfg["solver"] == "tv":
        res = solve_tv_asdpocs(A, b, _tv_options(cfg))
    else:
        res = solve_l1(A, b, _l1_options(cfg))
    write_image(res.image, os.path.join(out, "recon.pgm"), _window(cfg), cfg["pgm_ascii"])
    np.save(os.path.join(out, "recon.npy"), res.image)
    res.write_diagnostics_csv(os.path.join(out, "diagnostics.csv"))
    rec = StudyRecord("reconstruct", cfg["n_proj"], cfg["total_counts"] or 0.0,
                      cfg["theta_max"], cfg["epsilon"], rmse(res.image, x), res.converged,
                      res.iterations, seed)
    write_study_csv([rec], os.path.join(out, "summary.csv"))


def cmd_phase_diagram(cfg: RunConfig, out: str) -> None:
    noise = None if cfg["total_counts"] is None else DoseSpec(cfg["total_counts"])
    pcfg = PhaseDiagramConfig(
        grid_size=cfg["size"], k_values=tuple(cfg["k_values"]),
        mu_values=tuple(cfg["mu_values"]), trials_per_cell=cfg["trials_per_cell"],
        n_det=cfg["n_det"], rule=RecoveryRule(cfg["rmse_threshold"]), noise=noise,
        theta_max=cfg["theta_max"], base_seed=cfg["base_seed"],
        l1=replace(PHASE_L1_OPTIONS, nonneg=cfg["nonneg"],
                   max_iters=cfg["max_iters"] or PHASE_L1_OPTIONS.max_iters),
        eps_factors=tuple(cfg["eps_factors"] or DEFAULT_EPS_FACTORS))
    cells = run_phase_diagram(pcfg, threads=cfg["threads"])
    write_study_csv(cells, os.path.join(out, "phase_diagram.csv"))
    boundary = extract_transition_boundary(cells, cfg["boundary_level"])
    write_rows(os.path.join(out, "boundary.csv"), ["k", "mu"], boundary)


def _study_kwargs(cfg: RunConfig) -> dict:
    return dict(eps_grid=None if cfg["eps_values"] is None else np.asarray(cfg["eps_values"]),
                opts=_tv_options(cfg, study=True), base_seed=cfg["base_seed"],
                eps_factors=tuple(cfg["eps_factors"] or DEFAULT_EPS_FACTORS),
                n_det=cfg["n_det"], threads=cfg["threads"])


def cmd_dose_study(cfg: RunConfig, out: str) -> None:
    recs = run_dose_study(_phantom(cfg), cfg["total_counts_values"], cfg["n_proj_values"],
                          **_study_kwargs(cfg), theta_max=cfg["theta_max"])
    write_study_csv(recs, os.path.join(out, "dose_study.csv"))


def cmd_wedge_study(cfg: RunConfig, out: str) -> None:
    if cfg["total_counts"] is None:
        raise ConfigError("config key 'total_counts': required by wedge-study")
    recs = run_wedge_study(_phantom(cfg), cfg["total_counts"], cfg["theta_values"],
                           cfg["n_proj_values"], **_study_kwargs(cfg))
    write_study_csv(recs, os.path.join(out, "wedge_study.csv"))


def cmd_eps_sweep(cfg: RunConfig, out: str) -> None:
    x = _phantom(cfg)
    A, b, seed = _dataset(cfg, x)
    grid = _eps_grid(cfg, b)
    opts = _tv_options(cfg, study=True) if cfg["solver"] == "tv" else _l1_options(cfg)
    curve, best = run_epsilon_sweep(A, b, x, grid, cfg["solver"], opts, cfg["threads"],
                                    seed=seed)
    write_study_csv(curve, os.path.join(out, "eps_sweep.csv"))
    write_study_csv([best], os.path.join(out, "eps_sweep_best.csv"))


COMMANDS = {
    "phantom": cmd_phantom,
    "project": cmd_project,
    "reconstruct": cmd_reconstruct,
    "phase-diagram": cmd_phase_diagram,
    "dose-study": cmd_dose_study,
    "wedge-study": cmd_wedge_study,
    "eps-sweep": cmd_eps_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsetomo",
        description="Sparsity-exploiting tomographic reconstruction and sampling studies.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON file of parameters (defaults for missing keys)")
    parser.add_argument("--seed", type=int, help="base seed, overrides the config")
    parser.add_argument("--out", help="output directory, overrides the config")
    parser.add_argument("--threads", type=int, help="worker threads, overrides the config")
    return parser


def load_config(args) -> RunConfig:
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    cfg = parse_config(text)
    if cfg.subcommand is not None and cfg.subcommand != args.subcommand:
        raise ConfigError(f"config key 'subcommand': file says {cfg.subcommand!r}, "
                          f"command line says {args.subcommand!r}")
    return cfg.with_overrides(subcommand=args.subcommand, base_seed=args.seed,
                              out_dir=args.out, threads=args.threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        out = cfg["out_dir"]
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "config.json"), "w") as fh:
            fh.write(serialize_config(cfg))
        COMMANDS[args.subcommand](cfg, out)
    except (ConfigError, ParameterError) as exc:
        print(f"sparsetomo: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"sparsetomo: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GenerationError as exc:
        print(f"sparsetomo: generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
