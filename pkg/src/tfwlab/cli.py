"""Command line entry point: ``tfwlab <command> --config run.yaml --out results/``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .energy import assemble_density, energy_density, estimate_class_params, solovej_check
from .experiments import (invariant_suite, run_convergence_sweep, run_perturbation_study,
                          run_truncation_study, suite_passed)
from .response import force_fd, force_hf, route_forces
from .solver import solve_ground

log = logging.getLogger("tfwlab")


def _setup(args):
    cfg = io.load_config(args.config)
    grid = io.grid_from_config(cfg)
    nuc = io.nuclei_from_config(cfg, grid)
    m = io.density_from_config(cfg, grid, nuc)
    opts = io.solver_options_from_config(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, grid, nuc, m, opts, out


def _dump(args, out, grid, name, f):
    if args.dump_fields:
        io.write_field(out / f"{name}.tfwfield", grid, f)


def _state_summary(gs) -> dict:
    return {"a": gs.a, "energy": gs.energy, "mu": gs.mu, "r_u": gs.residuals[0],
            "r_phi": gs.residuals[1], "iterations": gs.iterations, "converged": gs.converged,
            "min_u": float(gs.u.min()),
            "solovej_min_margin": solovej_check(gs.u, gs.phi, gs.mu, gs.a).min_margin}


def cmd_solve(args):
    cfg, grid, nuc, m, opts, out = _setup(args)
    a = float(cfg.get("a", 1.0))
    progress = io.ProgressLog(out / "progress.csv")
    try:
        gs = solve_ground(grid, m, a, opts, progress=progress)
    finally:
        progress.close()
    _dump(args, out, grid, "u", gs.u)
    _dump(args, out, grid, "phi", gs.phi)
    _dump(args, out, grid, "m", m)
    for which in (1, 2):
        _dump(args, out, grid, f"energy_density_{which}",
              energy_density(grid, gs.u, gs.phi, gs.mu, a, m, which))
    return {"command": "solve", "state": _state_summary(gs), "passed": gs.converged}


def cmd_check(args):
    cfg, grid, nuc, m, opts, out = _setup(args)
    a = float(cfg.get("a", 1.0))
    gs = solve_ground(grid, m, a, opts)
    R_list = cfg.get("R_list") or [grid.L / 8 * i for i in range(1, 5)]
    params = estimate_class_params(grid, m, R_list)
    checks = invariant_suite(gs, m, tol=max(100 * opts.tol, 1e-8), condensed=params.condensed)
    io.write_csv(out / "checks.csv", ("name", "passed", "value", "threshold", "detail"),
                 [(c.name, c.passed, c.value, c.threshold, c.detail) for c in checks])
    return {"command": "check", "state": _state_summary(gs), "class_params": asdict(params),
            "checks": [asdict(c) for c in checks], "passed": suite_passed(checks)}


def cmd_sweep(args):
    cfg, grid, nuc, m, opts, out = _setup(args)
    a_list = [float(a) for a in cfg.get("a_list", [0.8, 0.4, 0.2, 0.1, 0.0])]
    site = cfg.get("site", 0) if len(nuc) else None
    states = []
    rep = run_convergence_sweep(grid, nuc, a_list, opts, force_site=site, states_out=states,
                                density=m)
    rows = []
    for i, s in enumerate(states):
        last = i == len(states) - 1
        rows.append((s.a, "" if last else rep.u_diff[i], "" if last else rep.phi_diff[i],
                     "" if last or not rep.force_diff else rep.force_diff[i],
                     rep.neutrality_defect[i], rep.min_u[i], s.iterations))
    io.write_csv(out / "sweep.csv", ("a", "u_w2inf_diff", "phi_w2inf_diff", "force_diff",
                                     "neutrality_defect", "min_u", "iterations"), rows)
    for s in states:
        _dump(args, out, grid, f"u_a{s.a:g}", s.u)
    fits_ok = all(f is not None and 1.8 <= f["slope"] <= 2.2 for f in (rep.u_fit, rep.phi_fit))
    return {"command": "sweep-a", "sweep": rep.to_dict(), "passed": fits_ok}


def cmd_forces(args):
    cfg, grid, nuc, m, opts, out = _setup(args)
    a = float(cfg.get("a", 0.2))
    sites = cfg.get("force_sites", [cfg.get("site", 0)])
    gs = solve_ground(grid, m, a, opts)
    rows, table = [], []
    for k in sites:
        forces = [force_hf(gs, nuc, k)]
        e1, e2, _ = route_forces(gs, nuc, k, opts)
        forces += [e1, e2]
        if cfg.get("fd", True):
            forces.append(force_fd(nuc, grid, a, k, cfg.get("fd_step"), opts, base=gs))
        for f in forces:
            rows.append((k, f.method, a, *f.F))
            table.append({"site": k, "method": f.method, "a": a, "F": f.F.tolist()})
    io.write_csv(out / "forces.csv", ("site", "method", "a", "Fx", "Fy", "Fz"), rows)
    return {"command": "forces", "state": _state_summary(gs), "forces": table, "passed": True}


def cmd_truncate(args):
    cfg, grid, nuc, m, opts, out = _setup(args)
    a = float(cfg.get("a", 0.2))
    hws = [float(x) for x in cfg.get("half_widths", [grid.L / 4, 3 * grid.L / 8])]
    rep = run_truncation_study(grid, nuc, hws, a, opts)
    io.write_csv(out / "truncation.csv", ("depth", "w2inf_envelope"), zip(rep.depths, rep.envelope))
    f = rep.fit
    return {"command": "truncate", "truncation": rep.to_dict(),
            "passed": f is not None and f.rate > 0 and f.r_squared >= 0.95}


def cmd_perturb(args):
    cfg, grid, nuc, m, opts, out = _setup(args)
    a = float(cfg.get("a", 0.2))
    site = int(cfg.get("site", 0))
    delta = cfg.get("delta", [0.1, 0.0, 0.0])
    rep = run_perturbation_study(grid, nuc, site, delta, a, opts)
    if rep.decay is not None:
        io.write_csv(out / "perturbation.csv", ("distance", "envelope"),
                     zip(rep.decay.distances, rep.decay.values))
    io.write_csv(out / "neutrality.csv", ("R", "ball_integral", "background_corrected"),
                 rep.neutrality_profile)
    _dump(args, out, grid, "w", rep.w)
    _dump(args, out, grid, "psi", rep.psi)
    passed = rep.decay is not None and rep.decay.rate > 0 and rep.decay.r_squared >= 0.95
    return {"command": "perturb", "perturbation": rep.to_dict(), "passed": passed}


COMMANDS = {
    "solve": cmd_solve,
    "sweep-a": cmd_sweep,
    "forces": cmd_forces,
    "truncate": cmd_truncate,
    "perturb": cmd_perturb,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tfwlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--dump-fields", action="store_true", help="write TFWFIELD v1 dumps")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    report = COMMANDS[args.command](args)
    report["runtime_s"] = time.perf_counter() - t0
    report["config"] = str(args.config)
    io.write_report(Path(args.out) / "report.json", report)
    print(f"{args.command}: {'PASS' if report.get('passed') else 'FAIL'} -> {args.out}/report.json")
    return 0 if report.get("passed") else 1


if __name__ == "__main__":
    sys.exit(main())
