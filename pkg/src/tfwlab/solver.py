"""TFW ground states by preconditioned energy descent with a Newton-CG finish.

For ``a > 0`` the energy is minimised without constraint. For ``a = 0`` the
iterate is kept on the sphere ``int v^2 = int m`` and the multiplier ``mu``
(the zero mode of the Coulomb potential) is reported alongside the zero-mean
potential ``phi``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, cg

from .energy import el_operator, el_residual, energy_gradient, tfw_energy
from .grid import Grid
from .interaction import green_multiplier, potential

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 20000
    step: float = 0.5
    backtrack: float = 0.5
    growth: float = 1.1
    warm_start: "GroundState | np.ndarray | None" = None
    dealias: bool = False
    newton: bool = True
    newton_switch: float = 1e-2
    cg_maxiter: int = 400
    raise_on_failure: bool = True

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class GroundState:
    grid: Grid
    u: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    mu: float
    a: float
    energy: float
    residuals: tuple[float, float]
    iterations: int
    converged: bool = True
    energy_log: list = field(default_factory=list, repr=False)

    @property
    def full_potential(self) -> np.ndarray:
        """``phi + mu``: the potential including its zero mode."""
        return self.phi + self.mu


def _state(grid: Grid, v, m, a, dealias):
    phi = potential(grid, a, m - v**2)
    mu = 0.0
    if a == 0:
        Lv = el_operator(grid, v, phi, 0.0, dealias)
        mu = float(np.sum(v * Lv) / np.sum(v * v))
    return phi, mu


def _slack(E: float) -> float:
    # energies closer than this are indistinguishable in double precision
    return 1e-13 * max(1.0, abs(E))


def _project(v, g):
    return g - (np.sum(g * v) / np.sum(v * v)) * v


def _renormalise(v, target):
    return v * np.sqrt(target / np.sum(v * v))


def _hessian_parts(grid, u, phi, mu, a):
    """Pieces of ``J d = -Lap d + q d + 2 u G_a(u d)`` where ``G_a`` has multiplier ``4 pi/(a^2+k^2)``."""
    q = 35 / 9 * np.abs(u) ** (4 / 3) - phi - mu
    gm = green_multiplier(grid, a)
    k2 = grid.k2

    def apply(d):
        d = d.reshape(grid.shape)
        lap = grid.ifft(k2 * grid.fft(d))
        nonlocal_ = 2 * u * grid.ifft(gm * grid.fft(u * d))
        return lap + q * d + nonlocal_

    w = u**2
    c = float(np.sum(w * q) / max(np.sum(w), 1e-300))
    c = max(c, 0.05)
    ubar2 = float(np.mean(u**2))
    prec_mult = 1.0 / (k2 + c + 2 * ubar2 * np.where(np.isfinite(gm), gm, 0.0))

    def precondition(r):
        return grid.ifft(prec_mult * grid.fft(r.reshape(grid.shape)))

    return apply, precondition


def _newton_direction(grid, u, phi, mu, a, F, rtol, maxiter):
    apply, precondition = _hessian_parts(grid, u, phi, mu, a)
    n = u.size
    if a == 0:
        def matvec(x):
            x = _project(u, x.reshape(grid.shape))
            return _project(u, apply(x)).ravel()

        def prec(x):
            return _project(u, precondition(_project(u, x.reshape(grid.shape)))).ravel()
        rhs = -_project(u, F).ravel()
    else:
        def matvec(x):
            return apply(x).ravel()

        def prec(x):
            return precondition(x).ravel()
        rhs = -F.ravel()
    A = LinearOperator((n, n), matvec=matvec, dtype=float)
    M = LinearOperator((n, n), matvec=prec, dtype=float)
    d, info = cg(A, rhs, rtol=rtol, atol=0.0, maxiter=maxiter, M=M)
    d = d.reshape(grid.shape)
    if a == 0:
        d = _project(u, d)
    return d, info


def solve_ground(grid: Grid, m: np.ndarray, a: float, opts: SolverOptions | None = None,
                 progress=None) -> GroundState:
    """Minimise the TFW energy for nuclear density ``m`` at screening ``a``.

    ``progress`` (optional callable) receives ``(iter, energy, r_u, r_phi)`` per accepted step.
    """
    opts = opts or SolverOptions()
    m = grid.check(m)
    a = float(a)
    if a < 0 or not np.isfinite(a):
        raise ValueError(f"screening must be finite and >= 0, got {a}")
    if np.any(m < 0):
        raise ValueError("nuclear density must be nonnegative")
    total = float(np.sum(m))
    dealias = opts.dealias

    if total == 0.0:
        z = np.zeros(grid.shape)
        return GroundState(grid, z, z.copy(), 0.0, a, 0.0, (0.0, 0.0), 0, True,
                           [(0, 0.0, 0.0, 0.0)])

    if opts.warm_start is not None:
        ws = opts.warm_start
        v = np.abs(grid.check(ws.u if isinstance(ws, GroundState) else ws)).copy()
    else:
        v = np.full(grid.shape, np.sqrt(total / m.size))
    if a == 0:
        v = _renormalise(v, total)

    def evaluate(v):
        phi, mu = _state(grid, v, m, a, dealias)
        r = el_residual(grid, v, phi, mu, a, m, dealias)
        E = tfw_energy(grid, v, m, a, dealias)
        return phi, mu, r, E

    phi, mu, res, E = evaluate(v)
    history = [(0, E, res[0], res[1])]
    if progress:
        progress(*history[-1])
    tau = opts.step
    newton_cooldown = 0
    it = 0
    best = (max(res), v, phi, mu, res, E)
    while max(res) > opts.tol and it < opts.max_iter:
        it += 1
        accepted = False
        if opts.newton and newton_cooldown == 0 and max(res) < opts.newton_switch:
            F = el_operator(grid, v, phi, mu, dealias)
            rtol = min(1e-2, max(1e-10, 0.1 * max(res)))
            d, _ = _newton_direction(grid, v, phi, mu, a, F, rtol, opts.cg_maxiter)
            t = 1.0
            while t > 1e-3:
                vn = np.abs(v + t * d)
                if a == 0:
                    vn = _renormalise(vn, total)
                phin, mun, resn, En = evaluate(vn)
                if En <= E + _slack(E) and (En < E - _slack(E) or max(resn) < max(res)):
                    v, phi, mu, res, E = vn, phin, mun, resn, En
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                newton_cooldown = 20
        if not accepted:
            newton_cooldown = max(newton_cooldown - 1, 0)
            g = energy_gradient(grid, v, m, a, dealias)
            if a == 0:
                g = _project(v, g)
            pg = grid.ifft(grid.fft(g) / (1.0 + grid.k2))
            while True:
                vn = np.abs(v - tau * pg)
                if a == 0:
                    vn = _renormalise(vn, total)
                En = tfw_energy(grid, vn, m, a, dealias)
                if En <= E:
                    break
                tau *= opts.backtrack
                if tau < 1e-14:
                    break
            if tau < 1e-14:
                log.warning("descent step underflow at a=%g, residual %.3e", a, max(res))
                break
            v = vn
            phi, mu = _state(grid, v, m, a, dealias)
            res = el_residual(grid, v, phi, mu, a, m, dealias)
            E = En
            tau = min(tau * opts.growth, 10.0)
        history.append((it, E, res[0], res[1]))
        if progress:
            progress(*history[-1])
        if max(res) < best[0]:
            best = (max(res), v, phi, mu, res, E)

    converged = max(res) <= opts.tol
    if not converged:
        _, v, phi, mu, res, E = best
    gs = GroundState(grid, v, phi, mu, a, E, tuple(res), it, converged, history)
    if not converged:
        msg = f"no convergence at a={a}: best residual {max(res):.3e} after {it} iterations"
        if opts.raise_on_failure:
            raise ConvergenceError(msg, best=gs)
        log.warning(msg)
    return gs


def solve_homogeneous(mbar: float, a: float) -> tuple[float, float, float]:
    """Exact translation-invariant ground state ``(u, phi, mu)`` for uniform density ``mbar``."""
    if mbar < 0:
        raise ValueError("mbar must be nonnegative")
    if mbar == 0:
        return 0.0, 0.0, 0.0
    if a == 0:
        return float(np.sqrt(mbar)), 0.0, 5 / 3 * mbar ** (2 / 3)
    c = 4 * np.pi / a**2

    def f(t):
        return 5 / 3 * t ** (4 / 3) - c * (mbar - t * t)

    t = brentq(f, 0.0, np.sqrt(mbar), xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return t, c * (mbar - t * t), 0.0


def continuation_sweep(grid: Grid, m: np.ndarray, a_list, opts: SolverOptions | None = None,
                       warm: bool = True) -> list[GroundState]:
    """Solve along a strictly decreasing ``a_list``, warm-starting each solve from the last."""
    a_list = [float(a) for a in a_list]
    if any(b >= a for a, b in zip(a_list, a_list[1:])):
        raise ValueError("a_list must be strictly decreasing")
    opts = opts or SolverOptions()
    states = []
    prev = opts.warm_start
    for a in a_list:
        o = replace(opts, warm_start=prev)
        try:
            gs = solve_ground(grid, m, a, o)
        except ConvergenceError as err:
            raise ConvergenceError(f"sweep failed at a={a}: {err}", best=err.best) from err
        states.append(gs)
        if warm:
            prev = gs
    return states
