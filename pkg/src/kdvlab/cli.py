"""Command-line interface.

Subcommands: evolve, greens, alpha, sweep-band, sweep-kappa, cutcompare,
squeeze, area, report.  All take a JSON config (documented in the README)
and an output directory; outputs are CSV tables plus a manifest with sha256
digests.  Exit codes: 0 success, 2 precondition failure, 3 numerical
certification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bridge import build_partition, compare_local, select_cut, unwrap
from .errors import CertificationError, PreconditionError
from .flows import (
    DEFAULT_BUDGET,
    FlowSpec,
    HamiltonianSpec,
    compare_flows,
    evolve,
    kappa_sweep,
    monitors,
)
from .greens import alpha, assemble_resolvent, green_diagonal, hs_norm
from .reporting import RunManifest, run_report, write_csv
from .spectral import MultiplierSpec, TorusGrid, make_field, sobolev_norm
from .squeeze import (
    SearchBudget,
    build_scenario,
    escape_search,
    image_area,
    linear_oracle,
    periodized_field,
    prototype_callable,
)


def _load_config(path):
    with open(path) as fh:
        return json.load(fh)


def _grid_from(cfg):
    g = cfg["grid"]
    return TorusGrid.make(g["length"], g["cutoff"], g.get("samples"))


def _field_from(cfg, grid):
    init = cfg["initial"]
    if "modes" in init:
        c = np.zeros(2 * grid.cutoff + 1, dtype=complex)
        for entry in init["modes"]:
            c[int(entry["j"]) + grid.cutoff] = complex(
                entry.get("re", 0.0), entry.get("im", 0.0))
        return make_field(grid, coeffs=c)
    if "prototype" in init:
        return periodized_field(prototype_callable(init["prototype"]), grid)
    raise PreconditionError("initial data must give 'modes' or 'prototype'")


def _flow_from(cfg):
    f = cfg["flow"]
    kind = f["kind"]
    if kind == "hkappa_band":
        return HamiltonianSpec.hkappa_band(f["kappa"], f["band"]["m"], f["band"]["M"])
    return HamiltonianSpec(kind, kappa=f.get("kappa"))


def _manifest(cfg, outputs, out_dir, seeds=None):
    man = RunManifest(config=cfg, budgets=DEFAULT_BUDGET.as_dict(),
                      seeds=seeds or {})
    for p in outputs:
        man.add_output(p)
    return run_report(man, out_dir)


def cmd_evolve(cfg, out):
    grid = _grid_from(cfg)
    q0 = _field_from(cfg, grid)
    t = cfg["time"]
    spec = FlowSpec(_flow_from(cfg), dt=t["dt"], T=t["T"],
                    saves=t.get("saves", 10), probes=tuple(cfg.get("probes", ())))
    traj = evolve(q0, spec)
    coeff_header = ["t"]
    for j in range(-grid.cutoff, grid.cutoff + 1):
        coeff_header += [f"re_{j}", f"im_{j}"]
    p1 = write_csv(os.path.join(out, "trajectory.csv"), coeff_header,
                   traj.coeff_table())
    mon_keys = sorted(traj.monitors)
    rows = [[traj.times[i]] + [traj.monitors[k][i] for k in mon_keys]
            for i in range(len(traj.times))]
    p2 = write_csv(os.path.join(out, "monitors.csv"), ["t"] + mon_keys, rows)
    if spec.probes:
        rep = monitors(traj)
        print("max relative drifts:")
        for key, val in sorted(rep.drifts.items()):
            print(f"  {key}: {val:.3e}")
    if not traj.certified:
        print("warning: trajectory left the smallness budget;", traj.warnings)
    return _manifest(cfg, [p1, p2], out)


def cmd_greens(cfg, out):
    grid = _grid_from(cfg)
    q = _field_from(cfg, grid)
    rows = []
    for kap in cfg.get("kappas", [2.0]):
        res = green_diagonal(assemble_resolvent(q, kap))
        xs = grid.points
        gs = res.g.samples_values()
        rows += [[kap, x, g] for x, g in zip(xs, gs)]
    p = write_csv(os.path.join(out, "green_diagonal.csv"), ["kappa", "x", "g"], rows)
    return _manifest(cfg, [p], out)


def cmd_alpha(cfg, out):
    grid = _grid_from(cfg)
    q = _field_from(cfg, grid)
    rows = []
    for kap in cfg.get("kappas", [2.0, 4.0, 8.0]):
        ctx = assemble_resolvent(q, kap)
        a = alpha(ctx)
        rows.append([kap, a.value, a.hs_norm])
    p = write_csv(os.path.join(out, "alpha.csv"), ["kappa", "alpha", "hs_norm"], rows)
    return _manifest(cfg, [p], out)


def cmd_sweep_band(cfg, out):
    grid = _grid_from(cfg)
    q0 = _field_from(cfg, grid)
    t = cfg["time"]
    kap = cfg["flow"]["kappa"]
    rows = []
    for band in cfg["bands"]:
        m, M = band["m"], band["M"]
        spec_full = FlowSpec(HamiltonianSpec.hkappa(kap), dt=t["dt"], T=t["T"],
                             saves=t.get("saves", 10))
        spec_band = FlowSpec(HamiltonianSpec.hkappa_band(kap, m, M), dt=t["dt"],
                             T=t["T"], saves=t.get("saves", 10))
        _, errs, _ = compare_flows(q0, q0, spec_band, spec_full)
        rate = m ** 0.5 + M ** (-0.5)
        rows.append([m, M, float(np.max(errs)), rate, float(np.max(errs)) / rate])
    p = write_csv(os.path.join(out, "band_sweep.csv"),
                  ["m", "M", "sup_error", "rate", "ratio"], rows)
    return _manifest(cfg, [p], out)


def cmd_sweep_kappa(cfg, out):
    grid = _grid_from(cfg)
    q0 = _field_from(cfg, grid)
    t = cfg["time"]
    sweep = kappa_sweep(q0, cfg.get("kappas", [2.0, 4.0, 8.0]), T=t["T"], dt=t["dt"],
                        saves=t.get("saves", 10))
    rows = [[k, v] for k, v in sorted(sweep.items())]
    p = write_csv(os.path.join(out, "kappa_sweep.csv"), ["kappa", "sup_error"], rows)
    return _manifest(cfg, [p], out)


def cmd_cutcompare(cfg, out):
    from .spectral import lp_project

    grid = _grid_from(cfg)
    band = MultiplierSpec.band(cfg["band"]["m"], cfg["band"]["M"])
    u0 = lp_project(_field_from(cfg, grid), band)
    part = build_partition(grid.length, cfg["partition"]["N"])
    plan = select_cut(u0, part)
    t = cfg["time"]
    times, errs, (_, _, q0) = compare_local(
        u0, plan, cfg["flow"]["kappa"], band, T=t["T"], dt=t["dt"],
        saves=t.get("saves", 8), box_cutoff=cfg.get("box_cutoff"))
    with open(os.path.join(out, "cutplan.json"), "w") as fh:
        json.dump(plan.to_json_dict(), fh, sort_keys=True, indent=2)
    rows = list(zip(times, errs))
    p = write_csv(os.path.join(out, "cut_error.csv"), ["t", "error_hm1"], rows)
    print(f"cut case {plan.case}, windows {plan.indices}, "
          f"|int q0| = {plan.integral_defect:.3e}, "
          f"||q0||_H-1 = {sobolev_norm(q0, -1.0):.4g}")
    return _manifest(cfg, [p, os.path.join(out, "cutplan.json")], out)


def cmd_squeeze(cfg, out):
    scenario = build_scenario(cfg["scenario"])
    b = cfg.get("search", {})
    budget = SearchBudget(starts=b.get("starts", 16), rounds=b.get("rounds", 2),
                          step=b.get("step", 0.5), dt=b.get("dt", 1e-3),
                          directions=b.get("directions", 8))
    result = escape_search(scenario, budget)
    rows = [[scenario.r, scenario.R, result.value, int(result.exceeds_r),
             result.evaluations]]
    p = write_csv(os.path.join(out, "squeeze.csv"),
                  ["r", "R", "best_value", "exceeds_r", "evaluations"], rows)
    if scenario.flow.is_linear:
        oracle = linear_oracle(scenario)
        print(f"linear oracle {oracle:.6g}, search {result.value:.6g}")
    print(f"best |<l,q(T)>-alpha| = {result.value:.6g} "
          f"({'exceeds' if result.exceeds_r else 'does not exceed'} r={scenario.r})")
    return _manifest(cfg, [p], out, seeds={"scenario": scenario.seed})


def cmd_area(cfg, out):
    scenario = build_scenario(cfg["scenario"])
    acfg = cfg.get("area", {})
    res = image_area(scenario, resolution=acfg.get("resolution", 512),
                     rings=acfg.get("rings"), angles=acfg.get("angles"),
                     dt=acfg.get("dt", 1e-3))
    expected = float(np.pi * scenario.R ** 2)
    rows = [[scenario.R, res.area, expected, res.area / expected, res.occupied_cells,
             res.resolution]]
    p = write_csv(os.path.join(out, "area.csv"),
                  ["R", "area", "pi_R_sq", "ratio", "occupied_cells", "resolution"],
                  rows)
    print(f"slice image area {res.area:.6g} vs pi R^2 = {expected:.6g}")
    return _manifest(cfg, [p], out, seeds={"scenario": scenario.seed})


def cmd_report(cfg, out):
    man = RunManifest(config=cfg)
    for path in cfg.get("files", []):
        man.add_output(path)
    paths = run_report(man, out)
    print(f"manifest with {len(man.outputs)} entries -> {paths[0]}")
    return paths


COMMANDS = {
    "evolve": cmd_evolve,
    "greens": cmd_greens,
    "alpha": cmd_alpha,
    "sweep-band": cmd_sweep_band,
    "sweep-kappa": cmd_sweep_kappa,
    "cutcompare": cmd_cutcompare,
    "squeeze": cmd_squeeze,
    "area": cmd_area,
    "report": cmd_report,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="kdvlab", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    try:
        cfg = _load_config(args.config)
        COMMANDS[args.command](cfg, args.out)
    except PreconditionError as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return 2
    except CertificationError as exc:
        print(f"numerical certification failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
