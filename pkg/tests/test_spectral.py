"""Grid, field and transform layer: exact identities and closed forms."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anderson2d import (
    Field,
    GridSpec,
    bessel_inverse,
    convolve,
    field_from_function,
    gradient,
    inner,
    japanese_bracket,
    l2_norm,
    laplacian,
    lp_norm,
    multiply,
    sobolev_norm,
    weighted_norm,
)
from anderson2d.spectral import grid_k2, symmetric_band_mask, transform

from conftest import random_field


def plane_wave(grid, mx, my):
    # exact lattice mode with integer indices
    k = 2.0 * np.pi / grid.L
    X, Y = grid.meshgrid_x()
    return Field(grid, np.exp(1j * (mx * k * X + my * k * Y))), (mx * k, my * k)


def test_grid_geometry():
    grid = GridSpec(16.0, 32)
    assert grid.h == 0.5
    assert grid.cell_area == 0.25
    ax = grid.axis_x()
    assert ax.shape == (32,)
    assert ax.min() == -8.0 and ax.max() == 7.5
    ak = grid.axis_k()
    dk = 2.0 * np.pi / 16.0
    assert np.isclose(np.diff(np.sort(ak)).max(), dk)
    assert np.isclose(grid.k_max_axis, np.pi * 32 / 16.0)
    assert np.isclose(grid.k_max_corner, np.sqrt(2.0) * grid.k_max_axis)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(16.0, 7)  # odd
    with pytest.raises(ValueError):
        GridSpec(-1.0, 32)


def test_round_trip(grid16):
    f = random_field(grid16, 0)
    g = Field(grid16, f.hat, "frequency")
    assert np.allclose(g.space, f.space, atol=1e-13)
    assert transform(f).representation == "frequency"


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_parseval(seed):
    grid = GridSpec(8.0, 16)
    f = random_field(grid, seed)
    # l2_norm is the quadrature norm; the coefficient norm must equal it
    assert np.isclose(l2_norm(f), np.linalg.norm(f.hat), rtol=1e-12)
    g = random_field(grid, seed + 1)
    assert np.isclose(inner(f, g), np.vdot(f.hat, g.hat), rtol=1e-11, atol=1e-13)


def test_plane_wave_multipliers(grid32):
    f, (kx, ky) = plane_wave(grid32, 3, -5)
    k2 = kx**2 + ky**2
    assert l2_norm(laplacian(f) + f * k2) <= 1e-12 * k2 * l2_norm(f)
    fx, fy = gradient(f)
    assert l2_norm(fx - f * (1j * kx)) <= 1e-12 * abs(kx) * l2_norm(f)
    assert l2_norm(fy - f * (1j * ky)) <= 1e-12 * abs(ky) * l2_norm(f)
    assert l2_norm(bessel_inverse(f) - f * (1.0 / (1.0 + k2))) <= 1e-13 * l2_norm(f)


def test_gradient_closed_form(grid32):
    L = grid32.L
    f = field_from_function(grid32, lambda x, y: np.sin(2 * np.pi * x / L) * np.cos(4 * np.pi * y / L))
    fx, fy = gradient(f)
    X, Y = grid32.meshgrid_x()
    ex = (2 * np.pi / L) * np.cos(2 * np.pi * X / L) * np.cos(4 * np.pi * Y / L)
    ey = -(4 * np.pi / L) * np.sin(2 * np.pi * X / L) * np.sin(4 * np.pi * Y / L)
    assert np.allclose(fx.space.real, ex, atol=1e-12)
    assert np.allclose(fy.space.real, ey, atol=1e-12)


def test_multiply_plane_waves(grid32):
    f, _ = plane_wave(grid32, 3, 0)
    g, _ = plane_wave(grid32, 4, 2)
    h, _ = plane_wave(grid32, 7, 2)
    for dealias in (False, True):
        p = multiply(f, g, dealias=dealias)
        assert l2_norm(p - h) <= 1e-12 * l2_norm(h)


def test_multiply_dealias_drops_out_of_band(grid32):
    # mode sum 12 + 9 = 21 exceeds the band [-16, 15]: the plain product
    # wraps it to -11, the Galerkin product discards it
    f, _ = plane_wave(grid32, 12, 0)
    g, _ = plane_wave(grid32, 9, 0)
    aliased = multiply(f, g)
    wrapped, _ = plane_wave(grid32, -11, 0)
    assert l2_norm(aliased - wrapped) <= 1e-12 * l2_norm(wrapped)
    assert l2_norm(multiply(f, g, dealias=True)) <= 1e-12


def test_convolve_direct_sum():
    grid = GridSpec(4.0, 8)
    f = random_field(grid, 3)
    g = random_field(grid, 4)
    out = convolve(f, g).space
    fv, gv = f.space, g.space
    expected = np.zeros_like(fv)
    for ix in range(8):
        for iy in range(8):
            acc = 0.0 + 0.0j
            for jx in range(8):
                for jy in range(8):
                    acc += fv[jx, jy] * gv[(ix - jx) % 8, (iy - jy) % 8]
            expected[ix, iy] = grid.cell_area * acc
    assert np.allclose(out, expected, atol=1e-12 * np.abs(expected).max())


def test_lp_and_weighted_norms(grid32):
    f = random_field(grid32, 11)
    a = np.abs(f.space)
    assert np.isclose(lp_norm(f, np.inf), a.max())
    assert np.isclose(lp_norm(f, 4.0), (grid32.cell_area * (a**4).sum()) ** 0.25)
    w = japanese_bracket(grid32, -1.5)
    expected = (grid32.cell_area * ((a * w) ** 2).sum()) ** 0.5
    assert np.isclose(weighted_norm(f, 2, 0.0, -1.5), expected, rtol=1e-12)
    with pytest.raises(ValueError):
        weighted_norm(f, 4.0, s=1.0)


def test_sobolev_norm_multiplier(grid32):
    f = random_field(grid32, 12)
    sym = (1.0 + grid_k2(grid32)) ** 0.75
    assert np.isclose(sobolev_norm(f, 1.5), np.linalg.norm(f.hat * sym), rtol=1e-12)
    assert np.isclose(sobolev_norm(f, 0.0), l2_norm(f), rtol=1e-12)


def test_weighted_norm_smoothness_path(grid32):
    f = random_field(grid32, 13)
    direct = np.linalg.norm(f.hat * (1.0 + grid_k2(grid32)) ** 0.5)
    assert np.isclose(weighted_norm(f, 2, 1.0, 0.0), direct, rtol=1e-12)


def test_symmetric_band_mask(grid32):
    mask = symmetric_band_mask(grid32)
    assert mask.sum() == 31 * 31
    # the unpaired Nyquist row and column are excluded
    nyq = np.argmin(grid32.axis_k())  # most negative frequency entry
    assert not mask[nyq, :].any()
    assert not mask[:, nyq].any()


def test_field_algebra(grid16):
    f = random_field(grid16, 21)
    g = random_field(grid16, 22)
    assert np.allclose((f + g).space, f.space + g.space)
    assert np.allclose((f - g).space, f.space - g.space)
    assert np.allclose((f * 2.5).space, 2.5 * f.space)
    assert np.allclose((-f).space, -f.space)
    assert np.allclose(f.conj().space, np.conj(f.space))
    assert np.allclose(f.real_part().space, f.space.real)
    with pytest.raises(ValueError):
        f + random_field(GridSpec(8.0, 32), 1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_multiplier_product_rule_dealiased(seed):
    """Gradient is a derivation for the Galerkin product of low-band fields."""
    grid = GridSpec(8.0, 16)
    rng = np.random.Generator(np.random.PCG64(seed))
    hat = np.zeros((16, 16), dtype=np.complex128)
    hat[:3, :3] = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    f = Field(grid, hat, "frequency")
    g = Field(grid, np.roll(hat, 1, axis=0), "frequency")
    fx, _ = gradient(f)
    gx, _ = gradient(g)
    px, _ = gradient(multiply(f, g, dealias=True))
    rhs = multiply(fx, g, dealias=True) + multiply(f, gx, dealias=True)
    assert l2_norm(px - rhs) <= 1e-11 * max(l2_norm(rhs), 1e-30)
