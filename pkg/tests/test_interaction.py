import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfwlab.grid import build_grid
from tfwlab.interaction import (ZeroModeError, d_pair, green_apply, green_residual, kernel_multiplier,
                                yukawa_ball_integral, yukawa_quarter_ball_closed_form, yukawa_real)

from conftest import smooth_random_field

# closed form (4 pi / a^2)(1 - 5/4 e^{-1/4}) at a = 1, evaluated with mpmath at 30 digits
QUARTER_BALL_A1 = 0.3329965208236542


def test_yukawa_real_examples():
    assert yukawa_real(1.0, 1.0) == pytest.approx(np.exp(-1.0), rel=1e-15)
    assert yukawa_real(0.0, 2.0) == 0.5


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_yukawa_real_rejects_nonpositive_r(r):
    with pytest.raises(ValueError):
        yukawa_real(1.0, r)


@pytest.mark.parametrize("a", [-0.1, np.inf, np.nan])
def test_bad_screening_rejected(a):
    with pytest.raises(ValueError):
        yukawa_real(a, 1.0)


def test_quarter_ball_closed_form_value():
    assert yukawa_quarter_ball_closed_form(1.0) == pytest.approx(QUARTER_BALL_A1, rel=1e-14)


@pytest.mark.parametrize("a", [0.1, 0.5, 1.0, 3.0])
def test_quarter_ball_quadrature(a):
    assert abs(yukawa_ball_integral(a, 1 / (4 * a)) - yukawa_quarter_ball_closed_form(a)) < 1e-6


def test_kernel_multiplier_examples():
    assert kernel_multiplier(1.0, 0.0) == pytest.approx(4 * np.pi)
    L = 2 * np.pi
    assert kernel_multiplier(0.0, (2 * np.pi / L) ** 2) == pytest.approx(4 * np.pi)
    with pytest.raises(ZeroModeError):
        kernel_multiplier(0.0, 0.0)


@given(a1=st.floats(0, 5), a2=st.floats(0, 5), k2=st.floats(1e-3, 100))
def test_monotone_screening(a1, a2, k2):
    lo, hi = sorted((a1, a2))
    assert kernel_multiplier(lo, k2) >= kernel_multiplier(hi, k2)


@given(a=st.floats(0, 3), k2=st.floats(1e-2, 100))
def test_kernel_limit(a, k2):
    coul = kernel_multiplier(0.0, k2)
    assert abs(kernel_multiplier(a, k2) - coul) <= (a**2 / k2 + 1e-14) * coul


@pytest.mark.parametrize("a", [0.0, 0.3, 1.0])
def test_green_single_mode(a):
    g = build_grid(8.0, 16)
    k = 2 * np.pi / g.L
    rho = np.cos(k * g.coords[0]) * np.ones(g.shape)
    phi, _ = green_apply(g, a, rho)
    expected = 4 * np.pi / (a**2 + k**2) * rho
    assert np.max(np.abs(phi - expected)) <= 1e-12 * np.max(np.abs(expected))


def test_green_constant_source():
    g = build_grid(4.0, 8)
    phi, info = green_apply(g, 1.0, g.constant(0.7))
    assert np.allclose(phi, 4 * np.pi * 0.7, rtol=1e-14)
    assert not info.projected
    phi0, info0 = green_apply(g, 0.0, g.constant(0.7))
    assert np.max(np.abs(phi0)) == 0.0
    assert info0.projected and info0.mean == pytest.approx(0.7)


@pytest.mark.parametrize("a", [0.0, 0.2, 1.0])
def test_green_identity_random(a):
    g = build_grid(8.0, 16)
    rho = smooth_random_field(g, np.random.default_rng(1), modes=5) + 2.0
    phi, _ = green_apply(g, a, rho)
    assert green_residual(g, a, rho, phi) <= 1e-10 * np.max(np.abs(4 * np.pi * rho))


def test_d_pair_constant_fields():
    g = build_grid(4.0, 8)
    c = 0.3
    assert d_pair(g, 1.0, g.constant(c), g.constant(c)) == pytest.approx(4 * np.pi * c**2 * g.volume)


def test_d_pair_zero_argument(small_grid):
    f = smooth_random_field(small_grid, np.random.default_rng(2))
    assert d_pair(small_grid, 0.5, f, np.zeros(small_grid.shape)) == 0.0


@pytest.mark.parametrize("a", [0.0, 0.7])
def test_d_pair_cos_mode_parseval(a):
    g = build_grid(8.0, 16)
    k = 2 * np.pi / g.L
    f = np.cos(k * g.coords[1]) * np.ones(g.shape)
    norm2 = g.integrate(f * f)
    assert d_pair(g, a, f, f) == pytest.approx(4 * np.pi * norm2 / (a**2 + k**2), rel=1e-12)


def test_d_pair_grid_mismatch():
    g1, g2 = build_grid(4.0, 8), build_grid(4.0, 16)
    with pytest.raises(ValueError):
        d_pair(g1, 1.0, np.ones(g1.shape), np.ones(g2.shape))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.sampled_from([0.0, 0.1, 1.0]))
def test_d_pair_symmetric_and_positive(seed, a):
    g = build_grid(4.0, 8)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=g.shape)
    h = rng.normal(size=g.shape)
    fh, hf = d_pair(g, a, f, h), d_pair(g, a, h, f)
    assert abs(fh - hf) <= 1e-12 * max(abs(fh), d_pair(g, a, f, f), 1e-300)
    assert d_pair(g, a, f, f) >= 0
