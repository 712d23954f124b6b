"""Linear response to nuclear displacements and nuclear forces.

Forces are reported as ``dE/dY_k``, the derivative of the total energy with
respect to the position of nucleus ``k`` (the integrated force density); the
mechanical force is its negative.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .energy import NuclearConfig, assemble_density, site_density_derivative
from .grid import Grid, grad_inner
from .interaction import green_multiplier, potential
from .solver import ConvergenceError, GroundState, SolverOptions, _hessian_parts, _project, solve_ground

METHODS = ("HF", "FD", "E1-route", "E2-route")


@dataclass
class Force:
    site: int
    F: np.ndarray
    method: str
    a: float = float("nan")

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float)
        if self.method not in METHODS:
            raise ValueError(f"unknown force method {self.method!r}")
        if self.F.shape != (3,) or not np.all(np.isfinite(self.F)):
            raise ValueError("force must be three finite components")


@dataclass
class LinearResponse:
    u_dot: np.ndarray = field(repr=False)
    phi_dot: np.ndarray = field(repr=False)
    m_dot: np.ndarray = field(repr=False)
    site: int
    direction: np.ndarray
    mu_dot: float = 0.0
    residuals: tuple[float, float] = (0.0, 0.0)
    iterations: int = 0


def _unit(V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    n = np.linalg.norm(V)
    if V.shape != (3,) or n == 0:
        raise ValueError("direction must be a nonzero 3-vector")
    if abs(n - 1) > 1e-12:
        raise ValueError(f"direction must have unit length, got |V| = {n}")
    return V


def displacement_density(cfg: NuclearConfig, grid: Grid, k: int, V) -> np.ndarray:
    """``m_dot = d/dh m(Y_k + h V)`` at ``h = 0``."""
    V = _unit(V)
    dm = site_density_derivative(cfg, grid, k)
    return V[0] * dm[0] + V[1] * dm[1] + V[2] * dm[2]


def solve_linearized(gs: GroundState, m_dot: np.ndarray, opts: SolverOptions | None = None,
                     site: int = -1, direction=(1.0, 0.0, 0.0)) -> LinearResponse:
    """Solve the linearised TFW equations for a nuclear-density perturbation ``m_dot``.

    For ``a = 0`` the electron response is restricted to ``int u u_dot = 0`` and the
    potential shift ``mu_dot`` is returned separately.
    """
    opts = opts or SolverOptions()
    grid = gs.grid
    m_dot = grid.check(m_dot)
    u = gs.u
    if not np.any(u > 0):
        raise ValueError("linearised system is singular for u = 0")
    a = gs.a
    if a == 0 and abs(grid.integrate(m_dot)) > 1e-8 * max(grid.integrate(np.abs(m_dot)), 1e-300):
        raise ValueError("Coulomb response needs a charge-conserving perturbation")
    n = u.size
    zero = np.zeros(grid.shape)
    if not np.any(m_dot):
        return LinearResponse(zero, zero.copy(), m_dot, site, np.asarray(direction, float))

    apply, precondition = _hessian_parts(grid, u, gs.phi, gs.mu, a)
    gm = green_multiplier(grid, a)
    rhs = u * grid.ifft(gm * grid.fft(m_dot))
    if a == 0:
        def P(x):
            return _project(u, x)
    else:
        def P(x):
            return x
    A = LinearOperator((n, n), dtype=float,
                       matvec=lambda x: P(apply(P(x.reshape(grid.shape)))).ravel())
    M = LinearOperator((n, n), dtype=float,
                       matvec=lambda x: P(precondition(P(x.reshape(grid.shape)))).ravel())
    count = [0]

    def cb(_):
        count[0] += 1

    b = P(rhs).ravel()
    x, info = cg(A, b, rtol=min(opts.tol, 1e-6), atol=0.0, maxiter=max(opts.cg_maxiter, 2000),
                 M=M, callback=cb)
    if info != 0:
        raise ConvergenceError(f"linear response did not converge (cg info {info})")
    u_dot = P(x.reshape(grid.shape))
    phi_dot = potential(grid, a, m_dot - 2 * u * u_dot)
    mu_dot = 0.0
    if a == 0:
        mu_dot = float(np.sum(u * (apply(u_dot) - rhs)) / np.sum(u * u))
    r_u, r_phi = linearized_residual(gs, u_dot, phi_dot, mu_dot, m_dot)
    return LinearResponse(u_dot, phi_dot, m_dot, site, np.asarray(direction, float), mu_dot,
                          (r_u, r_phi), count[0])


def linearized_residual(gs: GroundState, u_dot, phi_dot, mu_dot, m_dot) -> tuple[float, float]:
    grid, u, a = gs.grid, gs.u, gs.a
    lap = lambda f: grid.ifft(-grid.k2 * grid.fft(f))  # noqa: E731
    q = 35 / 9 * u ** (4 / 3) - gs.full_potential
    r_u = -lap(u_dot) + q * u_dot - u * (phi_dot + mu_dot)
    src = 4 * np.pi * (m_dot - 2 * u * u_dot)
    if a == 0:
        src = src - src.mean()
    r_phi = -lap(phi_dot) + a**2 * phi_dot - src
    return float(np.max(np.abs(r_u))), float(np.max(np.abs(r_phi)))


def force_hf(gs: GroundState, cfg: NuclearConfig, k: int) -> Force:
    """``int (phi + mu) dm/dY_k``: needs the ground state only."""
    dm = site_density_derivative(cfg, gs.grid, k)
    pot = gs.full_potential
    return Force(k, [gs.grid.integrate(pot * d) for d in dm], "HF", gs.a)


def force_fd(cfg: NuclearConfig, grid: Grid, a: float, k: int, step: float | None = None,
             opts: SolverOptions | None = None, base: GroundState | None = None) -> Force:
    """Central difference of the ground-state energy under ``Y_k -> Y_k +- step e_i``."""
    opts = opts or SolverOptions()
    step = 1e-3 * grid.h if step is None else float(step)
    if base is not None:
        opts = replace(opts, warm_start=base)
    F = []
    for i in range(3):
        E = []
        for sign in (1, -1):
            delta = np.zeros(3)
            delta[i] = sign * step
            m = assemble_density(cfg.displaced(k, delta), grid)
            try:
                E.append(solve_ground(grid, m, a, opts).energy)
            except ConvergenceError as err:
                raise ConvergenceError(f"displaced solve failed for site {k}, axis {i}: {err}",
                                       best=err.best) from err
        F.append((E[0] - E[1]) / (2 * step))
    return Force(k, F, "FD", a)


def force_density_routes(gs: GroundState, m: np.ndarray, response: LinearResponse) -> tuple[float, float]:
    """Directional force from the two energy densities, ``(E1-route, E2-route)``."""
    grid, u, a = gs.grid, gs.u, gs.a
    m = grid.check(m)
    u_dot, m_dot = response.u_dot, response.m_dot
    phi = gs.full_potential
    phi_dot = response.phi_dot + response.mu_dot
    local = 2 * grad_inner(grid, u, u_dot) + 10 / 3 * grid.integrate(u ** (7 / 3) * u_dot)
    e2 = local + (grad_inner(grid, phi, phi_dot) + a**2 * grid.integrate(phi * phi_dot)) / (4 * np.pi)
    e1 = local + 0.5 * grid.integrate(phi * (m_dot - 2 * u * u_dot) + phi_dot * (m - u**2))
    return e1, e2


def route_forces(gs: GroundState, cfg: NuclearConfig, k: int, opts: SolverOptions | None = None):
    """Force vectors on site ``k`` by both energy-density routes (three linear solves)."""
    m = assemble_density(cfg, gs.grid)
    e1, e2, responses = [], [], []
    for i in range(3):
        V = np.eye(3)[i]
        resp = solve_linearized(gs, displacement_density(cfg, gs.grid, k, V), opts, site=k, direction=V)
        r1, r2 = force_density_routes(gs, m, resp)
        e1.append(r1)
        e2.append(r2)
        responses.append(resp)
    return Force(k, e1, "E1-route", gs.a), Force(k, e2, "E2-route", gs.a), responses
