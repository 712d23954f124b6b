"""Convergence sweeps, truncation and perturbation studies, and invariant checks."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .energy import (NuclearConfig, SOLOVEJ_CONSTANT, assemble_density, el_residual,
                     energy_density, estimate_class_params, solovej_check)
from .fitting import DecayFit, fit_exponential, fit_power_law
from .grid import Grid, ball_integral, build_grid, derivative_envelope, wkinf_diff_norm
from .interaction import green_residual
from .response import force_hf
from .solver import GroundState, SolverOptions, continuation_sweep, solve_ground

log = logging.getLogger(__name__)

# data within this factor of the solver tolerance are treated as saturated
SATURATION_FACTOR = 100.0


def simple_cubic(L: float, per_axis: int, R0: float, displace=None) -> NuclearConfig:
    """Simple-cubic arrangement with spacing ``L / per_axis``; ``displace = (site, delta)``."""
    s = L / per_axis
    pts = (np.arange(per_axis) + 0.5) * s
    sites = np.array([[x, y, z] for x in pts for y in pts for z in pts])
    cfg = NuclearConfig(sites, R0)
    if displace is not None:
        k, delta = displace
        cfg = cfg.displaced(k, delta)
    return cfg


def reference_crystal() -> tuple[Grid, NuclearConfig]:
    """Eight nuclei on an ``L = 8`` torus (``N = 48``, ``R0 = 0.9``), site 0 shifted by 0.3."""
    return build_grid(8.0, 48), simple_cubic(8.0, 2, 0.9, displace=(0, (0.3, 0.0, 0.0)))


def a_ladder(a_max: float, count: int) -> list[float]:
    """Geometric ladder ``a_max, a_max/2, ...`` with ``count`` entries."""
    return [a_max / 2**i for i in range(count)]


# ---------------------------------------------------------------------------
# convergence in the screening parameter
# ---------------------------------------------------------------------------

@dataclass
class SweepReport:
    a_values: list
    u_diff: list
    phi_diff: list
    force_diff: list
    pair_ratios: list
    neutrality_defect: list
    min_u: list
    min_solovej_margin: float
    u_fit: dict | None = None
    phi_fit: dict | None = None
    force_fit: dict | None = None
    excluded: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    mode: str = "sequential warm-start"
    runtime_s: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _fit_or_none(xs, ys, floor, label, excluded):
    keep = [(x, y) for x, y in zip(xs, ys) if y > floor]
    for x, y in zip(xs, ys):
        if y <= floor:
            excluded.append({"metric": label, "a": x, "value": y})
    if len(keep) < 3:
        return None
    p, C, r2 = fit_power_law(*zip(*keep))
    return {"slope": p, "prefactor": C, "r_squared": r2, "points": len(keep)}


def run_convergence_sweep(grid: Grid, cfg: NuclearConfig, a_list, opts: SolverOptions | None = None,
                          force_site: int | None = 0, states_out: list | None = None,
                          density: np.ndarray | None = None) -> SweepReport:
    """Ground states along ``a_list`` (trailing 0) and their distance from the Coulomb state.

    ``density`` replaces the nuclear density assembled from ``cfg`` (e.g. a uniform medium).
    """
    a_list = [float(a) for a in a_list]
    if a_list[-1] != 0.0:
        raise ValueError("a_list must end with 0 (the Coulomb reference)")
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    m = assemble_density(cfg, grid) if density is None else grid.check(density)
    states = continuation_sweep(grid, m, a_list, opts)
    if states_out is not None:
        states_out.extend(states)
    ref = states[-1]
    yuk = states[:-1]
    u_diff = [wkinf_diff_norm(grid, s.u, ref.u, 2) for s in yuk]
    phi_diff = [wkinf_diff_norm(grid, s.full_potential, ref.full_potential, 2) for s in yuk]
    if force_site is not None and len(cfg):
        F0 = force_hf(ref, cfg, force_site).F
        force_diff = [float(np.linalg.norm(force_hf(s, cfg, force_site).F - F0)) for s in yuk]
    else:
        force_diff = []
    pair_ratios = []
    for s1, s2 in zip(yuk, yuk[1:]):
        pair_ratios.append(float(np.max(np.abs(s1.u - s2.u)) / (s1.a**2 - s2.a**2)))
    floor = SATURATION_FACTOR * opts.tol
    excluded: list = []
    a_y = [s.a for s in yuk]
    rep = SweepReport(
        a_values=a_list,
        u_diff=u_diff,
        phi_diff=phi_diff,
        force_diff=force_diff,
        pair_ratios=pair_ratios,
        neutrality_defect=[abs(float(np.mean(m - s.u**2))) for s in states],
        min_u=[float(s.u.min()) for s in states],
        min_solovej_margin=min(solovej_check(s.u, s.phi, s.mu, s.a).min_margin for s in states),
        iterations=[s.iterations for s in states],
    )
    rep.u_fit = _fit_or_none(a_y, u_diff, floor, "u", excluded)
    rep.phi_fit = _fit_or_none(a_y, phi_diff, floor, "phi", excluded)
    if force_diff:
        rep.force_fit = _fit_or_none(a_y, force_diff, floor, "force", excluded)
    rep.excluded = excluded
    rep.runtime_s = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# shell envelopes
# ---------------------------------------------------------------------------

def shell_maxima(distance: np.ndarray, values: np.ndarray, width: float, d_min: float, d_max: float):
    """Maximum of ``values`` over shells ``[d, d + width)`` between ``d_min`` and ``d_max``."""
    centers, maxima = [], []
    edges = np.arange(d_min, d_max + 1e-12, width)
    for lo, hi in zip(edges, edges[1:]):
        mask = (distance >= lo) & (distance < hi)
        if np.any(mask):
            centers.append(0.5 * (lo + hi))
            maxima.append(float(values[mask].max()))
    return np.asarray(centers), np.asarray(maxima)


def _decay_fit(centers, maxima, floor) -> DecayFit:
    keep = maxima > floor
    excluded = [(float(d), float(v)) for d, v in zip(centers[~keep], maxima[~keep])]
    fit = fit_exponential(centers[keep], maxima[keep])
    fit.excluded = excluded
    return fit


# ---------------------------------------------------------------------------
# thermodynamic limit
# ---------------------------------------------------------------------------

@dataclass
class TruncationReport:
    a: float
    half_widths: list
    depths: list
    envelope: list
    fit: DecayFit | None
    per_box: list

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit"] = self.fit.to_dict() if self.fit else None
        return d


def box_distance(grid: Grid, center, half_width: float) -> np.ndarray:
    """Depth of each point inside the cube ``|x - center|_inf <= half_width`` (negative outside)."""
    d = grid.min_image(center)
    linf = np.maximum(np.maximum(np.abs(d[0]), np.abs(d[1])), np.abs(d[2]))
    return half_width - linf


def run_truncation_study(grid: Grid, cfg: NuclearConfig, half_widths, a: float,
                         opts: SolverOptions | None = None, center=None,
                         states_out: list | None = None) -> TruncationReport:
    """Compare the full crystal with crystals truncated to centred cubes of the given half widths."""
    if a <= 0:
        raise ValueError("truncation study needs a > 0")
    opts = opts or SolverOptions()
    center = np.full(3, grid.L / 2) if center is None else np.asarray(center, float)
    m = assemble_density(cfg, grid)
    full = solve_ground(grid, m, a, opts)
    if states_out is not None:
        states_out.append(full)
    width = grid.h
    depth_env: dict[int, float] = {}
    per_box = []
    for hw in half_widths:
        if hw <= 0 or hw > grid.L / 2:
            raise ValueError(f"truncation box half width {hw} must lie in (0, L/2]")
        depth = box_distance(grid, center, hw)
        chi = (depth >= 0).astype(float)
        if hw == grid.L / 2:
            chi[:] = 1.0
        trunc = solve_ground(grid, m * chi, a, replace(opts, warm_start=full))
        if states_out is not None:
            states_out.append(trunc)
        env = derivative_envelope(grid, full.u - trunc.u, 2)
        centers, maxima = shell_maxima(depth, env, width, 0.0, hw)
        per_box.append({"half_width": hw, "depths": centers.tolist(), "envelope": maxima.tolist(),
                        "max_diff": float(np.max(np.abs(full.u - trunc.u)))})
        for c, v in zip(centers, maxima):
            key = int(round(c / width - 0.5))
            depth_env[key] = max(depth_env.get(key, 0.0), v)
    keys = sorted(depth_env)
    centers = np.array([(k + 0.5) * width for k in keys])
    maxima = np.array([depth_env[k] for k in keys])
    floor = SATURATION_FACTOR * opts.tol
    fit = _decay_fit(centers, maxima, floor) if np.sum(maxima > floor) >= 3 else None
    return TruncationReport(a, list(half_widths), centers.tolist(), maxima.tolist(), fit, per_box)


# ---------------------------------------------------------------------------
# local perturbations
# ---------------------------------------------------------------------------

@dataclass
class PerturbationReport:
    w: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    R_m: np.ndarray = field(repr=False)
    decay: DecayFit | None
    neutrality_profile: list
    support_radius: float
    a: float
    background: float = 0.0
    neutrality: dict | None = None

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "support_radius": self.support_radius,
            "decay": None if self.decay is None else self.decay.to_dict(),
            "neutrality_profile": self.neutrality_profile,
            "background_density": self.background,
            "neutrality": self.neutrality,
            "max_w": float(np.max(np.abs(self.w))),
            "max_psi": float(np.max(np.abs(self.psi))),
        }


def neutrality_envelope(profile, support: float, d_max: float) -> dict | None:
    """Right-running maximum of ``|int_{B_R} rho_12|`` (background removed) between support and guard.

    Reports the semilog decay fit of the envelope and the drop from its peak to
    the last unit of radius before ``d_max``.
    """
    pts = [(R, abs(c)) for R, _, c in profile if support <= R <= d_max]
    if len(pts) < 3:
        return None
    Rs = np.array([p[0] for p in pts])
    vals = np.array([p[1] for p in pts])
    env = np.maximum.accumulate(vals[::-1])[::-1]
    tail = float(env[Rs >= d_max - 1.0].max())
    out = {"radii": Rs.tolist(), "envelope": env.tolist(), "peak": float(env[0]), "tail": tail,
           "drop": float(env[0] / tail) if tail > 0 else float("inf")}
    if np.all(env > 0):
        fit = fit_exponential(Rs, env)
        out.update(rate=fit.rate, r_squared=fit.r_squared)
    return out


def run_perturbation_study(grid: Grid, cfg: NuclearConfig, site: int, delta, a: float,
                           opts: SolverOptions | None = None, states_out: list | None = None,
                           R_step: float | None = None) -> PerturbationReport:
    """Response of the ground state to moving nucleus ``site`` by ``delta``."""
    opts = opts or SolverOptions()
    delta = np.asarray(delta, dtype=float)
    cfg2 = cfg.displaced(site, delta)
    if np.any(cfg2.sites[site] < 0) or np.any(cfg2.sites[site] >= grid.L):
        raise ValueError("displaced site leaves the box")
    m1 = assemble_density(cfg, grid)
    m2 = assemble_density(cfg2, grid)
    s1 = solve_ground(grid, m1, a, opts)
    s2 = solve_ground(grid, m2, a, replace(opts, warm_start=s1))
    if states_out is not None:
        states_out.extend([s1, s2])
    w = s1.u - s2.u
    psi = s1.full_potential - s2.full_potential
    R_m = 4 * np.pi * (m1 - m2)
    center = cfg.sites[site]
    dist = grid.distance(center)
    support = cfg.R0 + float(np.linalg.norm(delta))
    d_max = grid.L / 2 - cfg.R0
    decay = None
    if np.any(delta):
        env = derivative_envelope(grid, w, 2) + np.abs(psi)
        centers, maxima = shell_maxima(dist, env, grid.h, support, d_max)
        if np.sum(maxima > SATURATION_FACTOR * opts.tol) >= 3:
            decay = _decay_fit(centers, maxima, SATURATION_FACTOR * opts.tol)
    rho12 = (m1 - s1.u**2) - (m2 - s2.u**2)
    R_step = grid.h if R_step is None else R_step
    # a > 0 on the torus leaves a uniform charge offset with no whole-space analogue
    background = float(np.mean(rho12))
    profile = []
    for R in np.arange(R_step, grid.L / 2 + 1e-12, R_step):
        raw = ball_integral(grid, rho12, center, R)
        vol = ball_integral(grid, np.ones(grid.shape), center, R)
        profile.append((float(R), raw, raw - background * vol))
    neutrality = neutrality_envelope(profile, support, d_max)
    return PerturbationReport(w, psi, R_m, decay, profile, support, a, background, neutrality)


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


def invariant_suite(gs: GroundState, m: np.ndarray, tol: float | None = None,
                    condensed: bool | None = None) -> list[Check]:
    """Pass/fail with margins for the pointwise and global identities a ground state must satisfy."""
    grid = gs.grid
    m = grid.check(m)
    tol = 1e-8 if tol is None else tol
    a = gs.a
    out = []
    umin = float(gs.u.min())
    if condensed is None:
        condensed = bool(np.all(m >= 0)) and grid.integrate(m) > 0
    out.append(Check("positivity", umin > 0 if condensed else umin >= 0, umin, 0.0,
                     "min u (strict for condensed configurations)"))
    r_u, r_phi = el_residual(grid, gs.u, gs.phi, gs.mu, a, m)
    out.append(Check("el_residual_u", r_u <= tol, r_u, tol))
    out.append(Check("el_residual_phi", r_phi <= tol, r_phi, tol))
    sol = solovej_check(gs.u, gs.phi, gs.mu, a)
    out.append(Check("solovej", sol.min_margin >= -1e-6, sol.min_margin, -1e-6,
                     f"C_S = {SOLOVEJ_CONSTANT:.6f}"))
    e1 = grid.integrate(energy_density(grid, gs.u, gs.phi, gs.mu, a, m, 1))
    e2 = grid.integrate(energy_density(grid, gs.u, gs.phi, gs.mu, a, m, 2))
    rel = abs(e1 - e2) / max(abs(e1), abs(e2), 1e-300) if (e1 or e2) else 0.0
    out.append(Check("energy_density_totals", rel <= 1e-9, rel, 1e-9, "|E1 - E2| / |E1|"))
    rho = m - gs.u**2
    gr = green_residual(grid, a, rho, gs.phi if a == 0 else gs.full_potential)
    scale = max(float(np.max(np.abs(4 * np.pi * rho))), 1e-300)
    out.append(Check("green_identity", gr <= 1e-10 * scale or gr <= 1e-14, gr / scale, 1e-10))
    total = grid.integrate(m)
    if a == 0:
        defect = abs(grid.integrate(rho))
        thr = max(tol, 1e-12) * max(total, 1e-300)
        out.append(Check("neutrality", defect <= thr, defect, thr, "|int (m - u^2)|"))
    else:
        zero_mode = float(np.mean(gs.full_potential))
        expect = 4 * np.pi / a**2 * float(np.mean(rho))
        err = abs(zero_mode - expect)
        thr = 1e-9 * max(abs(expect), 1.0)
        out.append(Check("potential_zero_mode", err <= thr and gs.mu == 0.0, err, thr,
                         "mean(phi) vs (4 pi / a^2) mean(m - u^2)"))
    energies = [row[1] for row in gs.energy_log]
    rises = [b - a_ for a_, b in zip(energies, energies[1:])]
    worst = max(rises, default=0.0)
    slack = 1e-13 * max(1.0, max((abs(e) for e in energies), default=1.0))
    out.append(Check("energy_descent", worst <= slack, worst, slack, "largest energy increase"))
    return out


def suite_passed(checks) -> bool:
    return all(c.passed for c in checks)


def class_params_for(grid: Grid, cfg: NuclearConfig, R_list=None):
    m = assemble_density(cfg, grid)
    R_list = R_list or [grid.L / 8 * i for i in range(1, 5)]
    return estimate_class_params(grid, m, R_list)
