"""Nuclear densities, the TFW energy, Euler-Lagrange residuals and energy densities.

Units are rescaled so the von Weizsaecker and Thomas-Fermi constants are both 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, ball_integrals_all_centers, laplacian
from .interaction import d_pair, potential

# Smallest value of C(lambda) = (9/4) pi^2 / (lambda^2 (5/3 - lambda)), attained at lambda = 10/9.
SOLOVEJ_CONSTANT = 6561 / 2000 * np.pi**2


def solovej_constant(lam: float) -> float:
    return 9 / 4 * np.pi**2 / (lam**2 * (5 / 3 - lam))


# ---------------------------------------------------------------------------
# nuclei
# ---------------------------------------------------------------------------

def bump_normalisation(R0: float) -> float:
    """``c0`` such that ``c0 (1 - r^2/R0^2)^4`` has unit integral over R^3."""
    return 3465 / (512 * np.pi * R0**3)


def bump(r, R0: float):
    s2 = np.minimum(np.asarray(r, dtype=float) ** 2 / R0**2, 1.0)
    return bump_normalisation(R0) * (1 - s2) ** 4


def bump_gradient(d, R0: float):
    """Gradient of the bump at displacement ``d = (d1, d2, d3)`` from its centre."""
    d1, d2, d3 = d
    s2 = np.minimum((d1**2 + d2**2 + d3**2) / R0**2, 1.0)
    radial = -8 * bump_normalisation(R0) / R0**2 * (1 - s2) ** 3
    return (radial * d1, radial * d2, radial * d3)


@dataclass
class NuclearConfig:
    """Smeared nuclei at ``sites`` (each row a point in ``[0, L)^3``) with bump radius ``R0``."""

    sites: np.ndarray
    R0: float
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.sites = np.asarray(self.sites, dtype=float).reshape(-1, 3)
        if self.weights is None:
            self.weights = np.ones(len(self.sites))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.sites),):
            raise ValueError("one weight per site required")
        if np.any(self.weights <= 0):
            raise ValueError("site weights must be positive")
        if self.R0 <= 0:
            raise ValueError("bump radius must be positive")

    def validate(self, grid: Grid) -> None:
        if self.R0 >= grid.L / 4:
            raise ValueError(f"bump radius {self.R0} must be below L/4 = {grid.L / 4}")
        if np.any(self.sites < 0) or np.any(self.sites >= grid.L):
            raise ValueError("every site must lie inside the box [0, L)^3")

    def displaced(self, k: int, delta) -> "NuclearConfig":
        self._check_index(k)
        sites = self.sites.copy()
        sites[k] = sites[k] + np.asarray(delta, dtype=float)
        return NuclearConfig(sites, self.R0, self.weights.copy())

    def _check_index(self, k: int) -> None:
        if not (0 <= k < len(self.sites)):
            raise IndexError(f"site index {k} out of range for {len(self.sites)} sites")

    def __len__(self):
        return len(self.sites)


def _site_profile(cfg: NuclearConfig, grid: Grid, k: int):
    d = np.broadcast_arrays(*grid.min_image(cfg.sites[k]))
    r = np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
    return d, bump(r, cfg.R0), bump_gradient(d, cfg.R0)


def site_density(cfg: NuclearConfig, grid: Grid, k: int) -> np.ndarray:
    """``w_k eta(x - Y_k)`` with the periodic minimal-image distance.

    The bump is rescaled so its grid sum is exactly ``w_k``; the analytic
    normalisation is off by up to ~1e-4 relative at five points per radius.
    """
    cfg._check_index(k)
    _, b, _ = _site_profile(cfg, grid, k)
    return cfg.weights[k] * b / grid.integrate(b)


def site_density_derivative(cfg: NuclearConfig, grid: Grid, k: int):
    """``d m / d Y_k`` (three fields), exact derivative of :func:`site_density`."""
    cfg._check_index(k)
    _, b, gb = _site_profile(cfg, grid, k)
    S = grid.integrate(b)
    out = []
    for gi in gb:
        # d/dY b(x - Y) = -grad b(x - Y)
        dS = -grid.integrate(gi)
        out.append(cfg.weights[k] * (-gi / S - b * dS / S**2))
    return tuple(out)


def assemble_density(cfg: NuclearConfig, grid: Grid) -> np.ndarray:
    """Nuclear charge density ``m(x) = sum_j w_j eta(x - Y_j)``."""
    sites = np.asarray(cfg.sites, dtype=float)
    if len(sites):
        # wrap sites that were displaced across a face
        cfg = NuclearConfig(np.mod(sites, grid.L), cfg.R0, cfg.weights)
    cfg.validate(grid)
    m = np.zeros(grid.shape)
    for k in range(len(cfg)):
        m += site_density(cfg, grid, k)
    return m


# ---------------------------------------------------------------------------
# energy functional
# ---------------------------------------------------------------------------

def dealias_filter(grid: Grid) -> np.ndarray:
    kmax = np.pi / grid.h
    keep = np.ones(grid.shape, dtype=bool)
    for kk in grid.kvec:
        keep &= np.abs(kk) <= 2 / 3 * kmax
    return keep


def _tf_field(grid: Grid, v: np.ndarray, dealias: bool) -> np.ndarray:
    if not dealias:
        return v
    return grid.ifft(grid.fft(v) * dealias_filter(grid))


def kinetic_energy(grid: Grid, v: np.ndarray) -> float:
    """``int |grad v|^2`` evaluated through Parseval (full wavenumber set)."""
    vh = grid.fft(v)
    return float(grid.dV / v.size * np.sum(grid.parseval_weights * grid.k2 * np.abs(vh) ** 2))


def tfw_energy(grid: Grid, v: np.ndarray, m: np.ndarray, a: float, dealias: bool = False) -> float:
    """``int |grad v|^2 + int |v|^{10/3} + 1/2 D_a(m - v^2, m - v^2)``."""
    v = grid.check(v)
    m = grid.check(m)
    vt = _tf_field(grid, v, dealias)
    rho = m - v**2
    return (kinetic_energy(grid, v) + grid.integrate(np.abs(vt) ** (10 / 3))
            + 0.5 * d_pair(grid, a, rho, rho))


def energy_gradient(grid: Grid, v: np.ndarray, m: np.ndarray, a: float,
                    dealias: bool = False) -> np.ndarray:
    """L2 gradient of :func:`tfw_energy`: ``-2 Lap v + (10/3)|v|^{4/3} v - 2 phi_v v``."""
    vt = _tf_field(grid, v, dealias)
    tf = 10 / 3 * np.abs(vt) ** (4 / 3) * vt
    if dealias:
        tf = grid.ifft(grid.fft(tf) * dealias_filter(grid))
    phi = potential(grid, a, m - v**2)
    return -2 * laplacian(grid, v) + tf - 2 * phi * v


def el_operator(grid: Grid, u: np.ndarray, phi: np.ndarray, mu: float,
                dealias: bool = False) -> np.ndarray:
    """``-Lap u + (5/3) u^{7/3} - (phi + mu) u``."""
    ut = _tf_field(grid, u, dealias)
    tf = 5 / 3 * np.abs(ut) ** (4 / 3) * ut
    if dealias:
        tf = grid.ifft(grid.fft(tf) * dealias_filter(grid))
    return -laplacian(grid, u) + tf - (phi + mu) * u


def el_residual(grid: Grid, u: np.ndarray, phi: np.ndarray, mu: float, a: float,
                m: np.ndarray, dealias: bool = False) -> tuple[float, float]:
    """Sup-norm residuals of the electron and potential equations.

    For ``a = 0`` the potential equation is checked against its zero-mean right-hand side.
    """
    u = grid.check(u)
    phi = grid.check(phi)
    m = grid.check(m)
    r_u = float(np.max(np.abs(el_operator(grid, u, phi, mu, dealias))))
    rhs = 4 * np.pi * (m - u**2)
    if a == 0:
        rhs = rhs - rhs.mean()
    r_phi = float(np.max(np.abs(-laplacian(grid, phi) + a**2 * phi - rhs)))
    return r_u, r_phi


def _grad_sq_density(grid: Grid, f: np.ndarray) -> np.ndarray:
    """``|grad f|^2`` written as ``Lap(f^2)/2 - f Lap f``.

    Same function in the continuum; on the grid its integral keeps the Nyquist
    contribution that the pointwise spectral gradient drops.
    """
    return 0.5 * laplacian(grid, f * f) - f * laplacian(grid, f)


def energy_density(grid: Grid, u, phi, mu: float, a: float, m, which: int) -> np.ndarray:
    """Pointwise energy density; ``which=1`` is the potential form, ``which=2`` the field form."""
    u = grid.check(u)
    phi = grid.check(phi)
    m = grid.check(m)
    base = _grad_sq_density(grid, u) + np.abs(u) ** (10 / 3)
    full = phi + mu
    if which == 1:
        return base + 0.5 * full * (m - u**2)
    if which == 2:
        elec = _grad_sq_density(grid, phi)
        if a > 0:
            elec = elec + a**2 * full**2
        return base + elec / (8 * np.pi)
    raise ValueError(f"which must be 1 or 2, got {which}")


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass
class SolovejCheck:
    C_S: float
    margin_field: np.ndarray = field(repr=False)
    min_margin: float

    @property
    def holds(self) -> bool:
        return self.min_margin >= -1e-6


def solovej_check(u: np.ndarray, phi: np.ndarray, mu: float, a: float) -> SolovejCheck:
    """Margin of ``(10/9) u^{4/3} <= phi + C_S + a^2`` at every grid point."""
    margin = (phi + mu) + SOLOVEJ_CONSTANT + a**2 - 10 / 9 * np.abs(u) ** (4 / 3)
    return SolovejCheck(SOLOVEJ_CONSTANT, margin, float(margin.min()))


@dataclass
class ClassParams:
    """Discrete proxies for the uniform L2 bound ``M`` and the density floor ``(omega0, omega1)``."""

    M: float
    omega0: float
    omega1: float
    R_list: list = field(default_factory=list)
    min_ball: list = field(default_factory=list)

    @property
    def condensed(self) -> bool:
        return self.omega0 > 0


def estimate_class_params(grid: Grid, m: np.ndarray, R_list) -> ClassParams:
    """Estimate ``M`` and fit ``min_x int_{B_R(x)} m >= omega0 R^3 - omega1`` over ``R_list``."""
    R_list = [float(R) for R in R_list]
    if not R_list:
        raise ValueError("R_list must not be empty")
    m = grid.check(m)
    unit = min(1.0, grid.L / 2)
    M = float(np.sqrt(max(ball_integrals_all_centers(grid, m**2, unit).max(), 0.0)))
    mins = [float(ball_integrals_all_centers(grid, m, R).min()) for R in R_list]
    if len(R_list) == 1:
        omega0, omega1 = max(mins[0], 0.0) / R_list[0] ** 3, 0.0
    else:
        A = np.column_stack([np.power(R_list, 3), -np.ones(len(R_list))])
        (omega0, omega1), *_ = np.linalg.lstsq(A, np.asarray(mins), rcond=None)
    # within roundoff of an empty ball the floor is zero
    omega0 = float(max(omega0, 0.0)) if omega0 > 1e-12 else 0.0
    return ClassParams(M, omega0, float(omega1), R_list, mins)
