"""CLI subcommands: config parsing, outputs, manifests, exit codes."""

import json

import pytest

from kdvlab.cli import main
from kdvlab.reporting import sha256_digest


def run_cli(tmp_path, name, cfg, out="out"):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / out
    code = main([name, "--config", str(cfg_path), "--out", str(out_dir)])
    return code, out_dir


GRID = {"length": 6.283185307179586, "cutoff": 24}
MODES = {"modes": [{"j": 1, "re": 0.02}, {"j": -1, "re": 0.02},
                   {"j": 2, "im": 0.01}, {"j": -2, "im": -0.01}]}


def test_evolve_writes_trajectory_and_monitors(tmp_path):
    cfg = {
        "grid": GRID,
        "initial": MODES,
        "flow": {"kind": "kdv"},
        "time": {"dt": 1e-3, "T": 0.02, "saves": 2},
        "probes": [2.0],
    }
    code, out = run_cli(tmp_path, "evolve", cfg)
    assert code == 0
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header.split(",")[0] == "t"
    mon = (out / "monitors.csv").read_text().splitlines()
    assert "alpha(2)" in mon[0]
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"trajectory.csv", "monitors.csv"}


def test_greens_and_alpha_tables(tmp_path):
    cfg = {"grid": GRID, "initial": MODES, "kappas": [2.0, 4.0]}
    code, out = run_cli(tmp_path, "greens", cfg)
    assert code == 0
    assert (out / "green_diagonal.csv").exists()
    code, out = run_cli(tmp_path, "alpha", cfg, out="out2")
    assert code == 0
    lines = (out / "alpha.csv").read_text().splitlines()
    assert lines[0] == "kappa,alpha,hs_norm"
    assert len(lines) == 3


def test_sweep_kappa(tmp_path):
    cfg = {
        "grid": GRID,
        "initial": MODES,
        "time": {"dt": 2e-3, "T": 0.05, "saves": 2},
        "kappas": [2.0, 4.0],
    }
    code, out = run_cli(tmp_path, "sweep-kappa", cfg)
    assert code == 0
    lines = (out / "kappa_sweep.csv").read_text().splitlines()
    assert lines[0] == "kappa,sup_error"
    assert len(lines) == 3


def test_sweep_band(tmp_path):
    cfg = {
        "grid": {"length": 16.0, "cutoff": 48},
        "initial": {"modes": [{"j": 20, "re": 0.01}, {"j": -20, "re": 0.01}]},
        "flow": {"kind": "hkappa", "kappa": 2.0},
        "time": {"dt": 5e-3, "T": 0.05, "saves": 2},
        "bands": [{"m": 0.25, "M": 2.0}],
    }
    code, out = run_cli(tmp_path, "sweep-band", cfg)
    assert code == 0
    lines = (out / "band_sweep.csv").read_text().splitlines()
    assert lines[0] == "m,M,sup_error,rate,ratio"


def test_cutcompare(tmp_path):
    cfg = {
        "grid": {"length": 16.0, "cutoff": 64, "samples": 512},
        "initial": {"prototype": {"kind": "gauss_prime", "width": 1.0,
                                  "amplitude": 0.1}},
        "partition": {"N": 32},
        "band": {"m": 0.25, "M": 2.0},
        "flow": {"kappa": 1.0},
        "time": {"dt": 2e-3, "T": 0.01, "saves": 1},
    }
    code, out = run_cli(tmp_path, "cutcompare", cfg)
    assert code == 0
    plan = json.loads((out / "cutplan.json").read_text())
    assert plan["case"] in ("single", "pair-left", "pair-right")
    assert (out / "cut_error.csv").exists()


SCENARIO = {
    "grid": {"length": 16.0, "cutoff": 48},
    "band": {"m": 0.25, "M": 2.0},
    "center": {"kind": "gauss_prime", "width": 1.0, "amplitude": 0.05},
    "observable": {"kind": "gauss_bump", "width": 1.5, "amplitude": 1.0},
    "alpha": 0.01, "r": 0.02, "R": 0.04, "T": 0.7,
    "flow": {"kind": "kdv_linear"},
    "seed": 42,
}


def test_squeeze_linear(tmp_path):
    cfg = {"scenario": SCENARIO, "search": {"starts": 8, "rounds": 0}}
    code, out = run_cli(tmp_path, "squeeze", cfg)
    assert code == 0
    lines = (out / "squeeze.csv").read_text().splitlines()
    assert lines[0] == "r,R,best_value,exceeds_r,evaluations"


def test_area_linear(tmp_path):
    cfg = {"scenario": SCENARIO, "area": {"resolution": 128}}
    code, out = run_cli(tmp_path, "area", cfg)
    assert code == 0
    assert (out / "area.csv").exists()


def test_report_collects_digests(tmp_path):
    f = tmp_path / "data.csv"
    f.write_text("x\n1.0\n")
    cfg = {"files": [str(f)]}
    code, out = run_cli(tmp_path, "report", cfg)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outputs"]["data.csv"] == sha256_digest(f)


def test_precondition_failure_exit_codeـ2(tmp_path):
    bad = dict(SCENARIO, r=0.05, R=0.04)
    cfg = {"scenario": bad}
    code, _ = run_cli(tmp_path, "squeeze", cfg)
    assert code == 2


def test_certification_failure_exit_code_3(tmp_path):
    cfg = {
        "grid": {"length": 1.0, "cutoff": 24},
        "initial": {"modes": [{"j": 1, "re": 40.0}, {"j": -1, "re": 40.0}]},
        "flow": {"kind": "kdv"},
        "time": {"dt": 0.05, "T": 0.5, "saves": 1},
    }
    code, _ = run_cli(tmp_path, "evolve", cfg)
    assert code == 3
