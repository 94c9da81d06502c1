import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sparsetomo.cli import EXIT_CONFIG, EXIT_GENERATION, EXIT_IO, EXIT_OK, main
from sparsetomo.fileio import read_image

SMALL = {"size": 24, "phantom_kind": "pixel-sparse", "k_target": 0.2, "n_proj": 12,
         "max_iters": 150, "k_values": [0.1, 0.6], "mu_values": [0.3, 1.0],
         "trials_per_cell": 2, "total_counts_values": [1e4], "n_proj_values": [8, 12],
         "theta_values": [60, 90], "eps_factors": [0.5, 1.0, 2.0]}


def run(tmp_path, sub, name="out", **extra):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps({**SMALL, **extra}))
    out = tmp_path / name
    code = main([sub, "--config", str(cfg), "--out", str(out)])
    return code, out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_phantom(tmp_path):
    code, out = run(tmp_path, "phantom")
    assert code == EXIT_OK
    x = np.load(out / "phantom.npy")
    assert x.shape == (24, 24)
    pix = read_image(out / "phantom.pgm")
    assert pix.shape == (24, 24) and pix.dtype == np.uint16
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["subcommand"] == "phantom" and cfg["size"] == 24


def test_project(tmp_path):
    code, out = run(tmp_path, "project")
    assert code == EXIT_OK
    sino = np.load(out / "sinogram.npy")
    table = rows(out / "sinogram.csv")
    assert sino.shape == (12, 24)
    assert len(table) == 13 and len(table[0]) == 25
    assert float(table[1][0]) == pytest.approx(-90.0)
    np.testing.assert_allclose(np.array(table[1:], float)[:, 1:], sino, rtol=1e-8)


def test_reconstruct_both_solvers(tmp_path):
    for solver in ("tv", "l1"):
        code, out = run(tmp_path, "reconstruct", name=solver, solver=solver)
        assert code == EXIT_OK
        summary = rows(out / "summary.csv")
        assert summary[0][:2] == ["study", "n_proj"] and len(summary) == 2
        diag = rows(out / "diagnostics.csv")
        assert len(diag) - 1 == int(summary[1][7])
        assert np.load(out / "recon.npy").shape == (24, 24)


def test_phase_diagram(tmp_path):
    code, out = run(tmp_path, "phase-diagram")
    assert code == EXIT_OK
    table = rows(out / "phase_diagram.csv")
    assert table[0] == ["k", "mu", "n_proj", "n_trials", "n_recovered", "fraction"]
    assert len(table) == 1 + 4
    assert rows(out / "boundary.csv")[0] == ["k", "mu"]


def test_studies_and_sweep(tmp_path):
    code, out = run(tmp_path, "dose-study", name="dose")
    assert code == EXIT_OK
    dose = rows(out / "dose_study.csv")[1:]
    assert len(dose) == 2 and all(r[5] != "nan" for r in dose)
    code, out = run(tmp_path, "wedge-study", name="wedge", total_counts=1e4)
    assert code == EXIT_OK
    wedge = rows(out / "wedge_study.csv")[1:]
    assert [r[3] for r in wedge] == ["60", "60", "90", "90"]
    # the full-range rows reproduce the dose study (same noise seeds)
    assert wedge[2:] == [["wedge-study", *r[1:]] for r in dose]
    code, out = run(tmp_path, "eps-sweep", name="sweep", total_counts=1e4)
    assert code == EXIT_OK
    curve = rows(out / "eps_sweep.csv")
    best = rows(out / "eps_sweep_best.csv")
    assert len(curve) == 4 and len(best) == 2
    assert float(best[1][5]) == min(float(r[1]) for r in curve[1:])


def test_rerun_byte_identical(tmp_path):
    a = run(tmp_path, "eps-sweep", name="a", total_counts=1e4)[1]
    b = run(tmp_path, "eps-sweep", name="b", total_counts=1e4, threads=2)[1]
    for f in ("eps_sweep.csv", "eps_sweep_best.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_seed_flag_changes_phantom(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(SMALL))
    main(["phantom", "--config", str(cfg), "--out", str(tmp_path / "s0"), "--seed", "0"])
    main(["phantom", "--config", str(cfg), "--out", str(tmp_path / "s1"), "--seed", "1"])
    assert not np.array_equal(np.load(tmp_path / "s0/phantom.npy"),
                              np.load(tmp_path / "s1/phantom.npy"))
    assert json.loads((tmp_path / "s1/config.json").read_text())["base_seed"] == 1


def test_bad_key_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "phantom", epsilonn=1.0)
    assert code == EXIT_CONFIG
    assert "epsilonn" in capsys.readouterr().err


def test_mismatched_subcommand(tmp_path):
    assert run(tmp_path, "phantom", subcommand="project")[0] == EXIT_CONFIG


def test_missing_requirements(tmp_path):
    assert run(tmp_path, "wedge-study")[0] == EXIT_CONFIG
    # ideal data has no noise scale, so the tolerances must be explicit
    assert run(tmp_path, "eps-sweep", name="e")[0] == EXIT_CONFIG


def test_unwritable_out(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = tmp_path / "c.json"
    cfg.write_text("{}")
    code = main(["phantom", "--config", str(cfg), "--out", str(blocker / "sub")])
    assert code == EXIT_IO


def test_missing_config_file(tmp_path):
    assert main(["phantom", "--config", str(tmp_path / "none.json")]) == EXIT_IO


def test_generation_failure(tmp_path):
    # nearly every pixel would have to sit on an edge
    code, _ = run(tmp_path, "phantom", phantom_kind="ptc-like", size=16, grad_target=0.9,
                  grad_tol=0.001)
    assert code == EXIT_GENERATION


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(SMALL))
    proc = subprocess.run([sys.executable, "-m", "sparsetomo", "phantom", "--config", str(cfg),
                           "--out", str(tmp_path / "m")], capture_output=True, text=True,
                          env={**os.environ, "PYTHONHASHSEED": "1"})
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "m/phantom.pgm").exists()
    bad = subprocess.run([sys.executable, "-m", "sparsetomo", "nosuch"], capture_output=True)
    assert bad.returncode == 2
