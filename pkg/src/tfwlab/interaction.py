"""Yukawa / Coulomb kernels and the periodic Green operator of ``-Laplace + a^2``.

Fourier convention: ``F[f](k) = int f(x) exp(-i k.x) dx``; under it the potential
``phi`` solving ``-Laplace phi + a^2 phi = 4 pi rho`` has ``phi_hat = 4 pi rho_hat / (a^2 + |k|^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .grid import Grid, laplacian


class ZeroModeError(ValueError):
    """Coulomb multiplier requested at k = 0."""


def _check_screening(a: float) -> float:
    a = float(a)
    if not np.isfinite(a) or a < 0:
        raise ValueError(f"screening parameter must be finite and >= 0, got {a}")
    return a


def yukawa_real(a: float, r):
    """``exp(-a r) / r``; ``a = 0`` gives the Coulomb kernel."""
    a = _check_screening(a)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("yukawa_real needs r > 0")
    out = np.exp(-a * r) / r
    return float(out) if out.ndim == 0 else out


def yukawa_ball_integral(a: float, R: float) -> float:
    """Radial quadrature of ``Y_a`` over the ball ``B_R(0)`` (``4 pi int_0^R r^2 Y_a(r) dr``)."""
    val, _ = integrate.quad(lambda r: 4 * np.pi * r * np.exp(-a * r), 0.0, R,
                            epsabs=1e-14, epsrel=1e-13)
    return val


def yukawa_quarter_ball_closed_form(a: float) -> float:
    """Closed form of the integral of ``Y_a`` over ``B_{1/(4a)}(0)``."""
    return 4 * np.pi / a**2 * (1 - 1.25 * np.exp(-0.25))


def kernel_multiplier(a: float, k_squared):
    """Fourier multiplier ``4 pi / (a^2 + k^2)`` of the Green operator."""
    a = _check_screening(a)
    k_squared = np.asarray(k_squared, dtype=float)
    if a == 0 and np.any(k_squared == 0):
        raise ZeroModeError("zero-mode must be handled by caller (a = 0, k^2 = 0)")
    out = 4 * np.pi / (a**2 + k_squared)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ZeroModeInfo:
    """Mean of the source dropped by the Coulomb solve (``projected`` only for a = 0)."""

    mean: float
    projected: bool


def green_multiplier(grid: Grid, a: float) -> np.ndarray:
    a = _check_screening(a)
    denom = a**2 + grid.k2
    if a == 0:
        denom = denom.copy()
        denom[0, 0, 0] = np.inf
    return 4 * np.pi / denom


def green_apply(grid: Grid, a: float, rho: np.ndarray) -> tuple[np.ndarray, ZeroModeInfo]:
    """Solve ``-Laplace phi + a^2 phi = 4 pi rho`` on the torus.

    For ``a = 0`` the zero mode of ``rho`` is dropped and ``phi`` has zero mean;
    the dropped mean is reported in the returned ``ZeroModeInfo``.
    """
    rho = grid.check(rho)
    rho_hat = grid.fft(rho)
    phi = grid.ifft(green_multiplier(grid, a) * rho_hat)
    info = ZeroModeInfo(mean=float(rho_hat[0, 0, 0].real) / rho.size, projected=(a == 0))
    return phi, info


def potential(grid: Grid, a: float, rho: np.ndarray) -> np.ndarray:
    return green_apply(grid, a, rho)[0]


def green_residual(grid: Grid, a: float, rho: np.ndarray, phi: np.ndarray) -> float:
    """``max |(-Laplace + a^2) phi - 4 pi rho|``; for ``a = 0`` against the zero-mean source."""
    rhs = 4 * np.pi * grid.check(rho)
    if a == 0:
        rhs = rhs - rhs.mean()
    return float(np.max(np.abs(-laplacian(grid, phi) + a**2 * phi - rhs)))


def d_pair(grid: Grid, a: float, f: np.ndarray, g: np.ndarray) -> float:
    """Torus analogue of ``D_a(f, g) = int (f * Y_a) g``.

    ``f * Y_a`` is exactly the potential of ``f`` from :func:`green_apply`, so no
    extra ``4 pi`` appears here.
    """
    f = grid.check(f)
    g = grid.check(g)
    phi_f = potential(grid, a, f)
    if a == 0:
        g = g - g.mean()
    return grid.integrate(phi_f * g)
