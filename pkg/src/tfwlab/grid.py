"""Periodic cubic grids, spectral derivatives, norms and ball integrals.

Fields are plain ``numpy`` arrays of shape ``(N, N, N)`` indexed ``[i1, i2, i3]``
with ``x3`` varying fastest in memory (C order).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the cube ``[0, L)^3`` with ``N`` points per axis."""

    L: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"box length must be positive, got {self.L}")
        if int(self.N) != self.N or self.N % 2:
            raise ValueError(f"odd N not allowed (got {self.N})")
        if self.N < 8:
            raise ValueError(f"N must be at least 8 (got {self.N})")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.N, self.N, self.N)

    @property
    def dV(self) -> float:
        return self.h**3

    @property
    def volume(self) -> float:
        return self.L**3

    @cached_property
    def x1d(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.x1d, self.x1d, self.x1d, indexing="ij"))

    @cached_property
    def k1d(self) -> np.ndarray:
        """Wavenumbers ``2*pi/L * n`` for ``n = -N/2, ..., N/2 - 1`` in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    @cached_property
    def k1d_half(self) -> np.ndarray:
        return 2 * np.pi * np.fft.rfftfreq(self.N, d=self.h)

    @cached_property
    def kvec(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Wavenumber components broadcastable to the real-FFT coefficient array."""
        k, kh = self.k1d, self.k1d_half
        return (k[:, None, None], k[None, :, None], kh[None, None, :])

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Multiplicity of each real-FFT coefficient in the full spectrum."""
        w = np.full(self.N // 2 + 1, 2.0)
        w[0] = w[-1] = 1.0
        return w[None, None, :]

    @cached_property
    def k2(self) -> np.ndarray:
        k1, k2, k3 = self.kvec
        return k1**2 + k2**2 + k3**2

    @cached_property
    def _odd_multiplier(self) -> tuple[np.ndarray, ...]:
        # The Nyquist mode has no odd-derivative partner on a real grid.
        k = self.k1d.copy()
        k[self.N // 2] = 0.0
        kh = self.k1d_half.copy()
        kh[-1] = 0.0
        return (1j * k[:, None, None], 1j * k[None, :, None], 1j * kh[None, None, :])

    def fft(self, f: np.ndarray) -> np.ndarray:
        return sfft.rfftn(f)

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        return sfft.irfftn(fh, s=self.shape)

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"grid mismatch: field shape {f.shape} vs grid {self.shape}")
        return f

    def integrate(self, f: np.ndarray) -> float:
        return float(self.dV * np.sum(f))

    def mean(self, f: np.ndarray) -> float:
        return float(np.mean(f))

    def constant(self, c: float) -> np.ndarray:
        return np.full(self.shape, float(c))

    def min_image(self, center) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Minimal-image displacement components ``x - center`` on each axis."""
        out = []
        for axis, c in enumerate(center):
            d = self.x1d - c
            d = d - self.L * np.round(d / self.L)
            shape = [1, 1, 1]
            shape[axis] = self.N
            out.append(d.reshape(shape))
        return tuple(out)

    def distance(self, center) -> np.ndarray:
        d1, d2, d3 = self.min_image(center)
        return np.sqrt(d1**2 + d2**2 + d3**2)


def build_grid(L: float, N: int) -> Grid:
    return Grid(float(L), int(N))


MULTI_INDICES = tuple(
    alpha for alpha in itertools.product(range(3), repeat=3) if sum(alpha) <= 2
)


def multi_indices(order: int) -> list[tuple[int, int, int]]:
    """All multi-indices with ``|alpha| <= order`` (order at most 2)."""
    if order < 0 or order > 2:
        raise ValueError(f"derivative order must be in 0..2, got {order}")
    return [alpha for alpha in MULTI_INDICES if sum(alpha) <= order]


def _multiplier(grid: Grid, alpha) -> np.ndarray | float:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != 3 or min(alpha) < 0:
        raise ValueError(f"bad multi-index {alpha}")
    if sum(alpha) > 2:
        raise ValueError(f"|alpha| = {sum(alpha)} exceeds 2")
    mult: np.ndarray | float = 1.0
    for axis, order in enumerate(alpha):
        if order == 1:
            mult = mult * grid._odd_multiplier[axis]
        elif order == 2:
            mult = mult * (-grid.kvec[axis] ** 2)
    return mult


def spectral_derivative(grid: Grid, f: np.ndarray, alpha) -> np.ndarray:
    """``d^alpha f`` by Fourier multipliers; exact on resolved trigonometric polynomials."""
    f = grid.check(f)
    mult = _multiplier(grid, alpha)
    if sum(alpha) == 0:
        return f.copy()
    return grid.ifft(mult * grid.fft(f))


def gradient(grid: Grid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    fh = grid.fft(grid.check(f))
    return tuple(grid.ifft(m * fh) for m in grid._odd_multiplier)


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    return grid.ifft(-grid.k2 * grid.fft(grid.check(f)))


def grad_sq(grid: Grid, f: np.ndarray) -> np.ndarray:
    return sum(g**2 for g in gradient(grid, f))


def derivative_stack(grid: Grid, f: np.ndarray, order: int = 2) -> np.ndarray:
    """Array of shape ``(n_alpha, N, N, N)`` holding ``d^alpha f`` for ``|alpha| <= order``."""
    fh = grid.fft(grid.check(f))
    out = []
    for alpha in multi_indices(order):
        if sum(alpha) == 0:
            out.append(np.asarray(f, dtype=float))
        else:
            out.append(grid.ifft(_multiplier(grid, alpha) * fh))
    return np.stack(out)


def wkinf_diff_norm(grid: Grid, f: np.ndarray, g: np.ndarray, k: int = 2) -> float:
    """``max_{|alpha|<=k} max_x |d^alpha (f - g)|``."""
    d = grid.check(f) - grid.check(g)
    return float(np.max(np.abs(derivative_stack(grid, d, k))))


def derivative_envelope(grid: Grid, f: np.ndarray, order: int = 2) -> np.ndarray:
    """Pointwise ``sum_{|alpha|<=order} |d^alpha f|``."""
    return np.sum(np.abs(derivative_stack(grid, f, order)), axis=0)


def ball_integral(grid: Grid, f: np.ndarray, center, R: float) -> float:
    """Midpoint sum of ``f`` over grid points within periodic distance ``R`` of ``center``."""
    f = grid.check(f)
    if R <= 0 or R > grid.L / 2:
        raise ValueError(f"ball radius must lie in (0, L/2], got {R}")
    mask = grid.distance(center) <= R
    return float(grid.dV * np.sum(f[mask]))


def ball_integrals_all_centers(grid: Grid, f: np.ndarray, R: float) -> np.ndarray:
    """Ball integrals of ``f`` centred at every grid point (periodic convolution)."""
    f = grid.check(f)
    if R <= 0 or R > grid.L / 2:
        raise ValueError(f"ball radius must lie in (0, L/2], got {R}")
    indicator = (grid.distance((0.0, 0.0, 0.0)) <= R).astype(float)
    # indicator is symmetric under x -> -x, so correlation equals convolution
    return grid.dV * grid.ifft(grid.fft(f) * grid.fft(indicator))


def grad_inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    """``int grad f . grad g`` through Parseval, consistent with :func:`laplacian`."""
    fh = grid.fft(grid.check(f))
    gh = grid.fft(grid.check(g))
    s = np.sum(grid.parseval_weights * grid.k2 * (fh * np.conj(gh)).real)
    return float(grid.dV / f.size * s)
