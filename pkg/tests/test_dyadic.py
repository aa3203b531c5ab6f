"""Dyadic frame: partition identities, block supports, scaling fits.

Closed-form cases place plane waves on the flat part of a block symbol:
rho_j equals one exactly on 4/3 * 2^j <= |k| <= 3/2 * 2^j, so a mode there
is carried by a single block with coefficient one.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anderson2d import (
    Field,
    GridSpec,
    besov_norm,
    bernstein_check,
    block,
    block_stack,
    build_partition,
    chi_profile,
    cutoff,
    l2_norm,
    rho_profile,
)
from anderson2d.dyadic import scaling_slope
from anderson2d.noise import regularity_diagnostic
from anderson2d.spectral import grid_abs_k

from conftest import random_field


def lattice_mode(grid, mx, my):
    k = 2.0 * np.pi / grid.L
    X, Y = grid.meshgrid_x()
    return Field(grid, np.exp(1j * k * (mx * X + my * Y)))


def test_profiles():
    t = np.linspace(0.0, 3.0, 601)
    chi = chi_profile(t)
    assert np.all(chi[t <= 0.75] == 1.0)
    assert np.all(chi[t >= 4.0 / 3.0] == 0.0)
    mid = chi[(t > 0.75) & (t < 4.0 / 3.0)]
    assert np.all(np.diff(mid) <= 1e-12)
    assert np.allclose(rho_profile(t), chi_profile(t / 2.0) - chi_profile(t))
    # negative arguments are radial
    assert chi_profile(-0.5) == chi_profile(0.5)


def test_partition_of_unity(grid32, part32):
    total = part32.symbols.sum(axis=0)
    assert np.abs(total - 1.0).max() <= 1e-12
    f = random_field(grid32, 5)
    stack = block_stack(f, part32)
    assert np.abs(stack.sum(axis=0) - f.space).max() <= 1e-12 * np.abs(f.space).max()


def test_partition_shape_and_guard(grid32, part32):
    assert part32.n_blocks == part32.j_max + 2
    with pytest.raises(ValueError):
        part32.symbol(part32.j_max + 1)
    with pytest.raises(ValueError):
        build_partition(GridSpec(16.0, 8))  # corner frequency too low


def test_block_supports(grid64, part64):
    absk = grid_abs_k(grid64)
    f = random_field(grid64, 6)
    for j in range(part64.j_max):  # annular blocks below the absorber
        g = block(f, part64, j)
        outside = (absk < 0.75 * 2.0**j) | (absk > (8.0 / 3.0) * 2.0**j)
        assert np.abs(g.hat[outside]).max() <= 1e-14 * np.abs(f.hat).max()
    low = block(f, part64, -1)
    assert np.abs(low.hat[absk > 4.0 / 3.0]).max() <= 1e-14 * np.abs(f.hat).max()


def test_cutoff_complement(grid32, part32):
    f = random_field(grid32, 7)
    for n in (-1, 0, 1, part32.j_max):
        lo = cutoff(f, part32, "<=", n)
        hi = cutoff(f, part32, ">", n)
        assert np.abs(lo.hat + hi.hat - f.hat).max() <= 1e-13 * np.abs(f.hat).max()
        lo2 = cutoff(f, part32, "<", n)
        hi2 = cutoff(f, part32, ">=", n)
        assert np.abs(lo2.hat + hi2.hat - f.hat).max() <= 1e-13 * np.abs(f.hat).max()
    with pytest.raises(ValueError):
        cutoff(f, part32, "between", 1)


def test_plane_wave_single_block(grid64, part64):
    # |k| = 14 dk = 5.50 sits on the flat part of rho_2
    f = lattice_mode(grid64, 14, 0)
    stack = block_stack(f, part64)
    assert np.allclose(stack[2 + 1], f.space, atol=1e-12)
    for idx in range(stack.shape[0]):
        if idx != 3:
            assert np.abs(stack[idx]).max() <= 1e-12


def test_besov_norm_plane_wave(grid64, part64):
    f = lattice_mode(grid64, 14, 0)  # block j = 2 exactly
    for alpha in (-1.0, 0.5):
        assert np.isclose(besov_norm(f, part64, alpha), 2.0 ** (2 * alpha), rtol=1e-12)
    # p = 2: the block norm is the full L^2 norm of the mode
    assert np.isclose(besov_norm(f, part64, 0.5, p=2), 2.0 * grid64.L, rtol=1e-12)
    # windowing a unimodular wave leaves the sup norm unchanged
    window = grid64.abs_x() <= 2.0
    assert np.isclose(besov_norm(f, part64, 0.5, window_mask=window), 2.0, rtol=1e-12)


def test_besov_norm_q_sum(grid64, part64):
    f = lattice_mode(grid64, 14, 0) + lattice_mode(grid64, 2, 3) * 0.5
    # modes in blocks 2 and 0; q = 1 sums the scale terms
    terms = [0.5, 2.0**1.5]
    assert np.isclose(besov_norm(f, part64, 0.75, q=1), sum(terms), rtol=1e-10)


def test_bernstein_ratios(grid32, part32):
    for seed in range(10):
        f = random_field(grid32, 100 + seed)
        for j in range(0, part32.j_max + 1):
            out = bernstein_check(f, part32, j)
            assert out["direct_ratio"] <= 8.0 / 3.0 + 1e-9
            assert out["reverse_ratio"] <= 4.0 / 3.0 + 1e-9


def test_bernstein_zero_block(grid32, part32):
    zero = Field(grid32, np.zeros((32, 32), dtype=np.complex128))
    out = bernstein_check(zero, part32, 1)
    assert out["direct_ratio"] == 0.0 and out["norm"] == 0.0


def test_scaling_slope_exact():
    norms = {j: 2.0 ** (-1.37 * j) for j in range(5)}
    slope, used = scaling_slope(norms)
    assert used == 5
    assert abs(slope + 1.37) <= 1e-12
    norms[5] = 0.0  # vanishing scales are skipped
    slope, used = scaling_slope(norms)
    assert used == 5
    slope, used = scaling_slope({0: 1.0})
    assert slope == 0.0 and used == 1


def test_regularity_from_pure_zones(grid64, part64):
    """Modes on flat symbol zones of blocks 0..3 give an exact slope."""
    sigma_reg = 0.8
    f = (
        lattice_mode(grid64, 2, 3) * (2.0 ** (-sigma_reg * 0))
        + lattice_mode(grid64, 7, 0) * (2.0 ** (-sigma_reg * 1))
        + lattice_mode(grid64, 14, 0) * (2.0 ** (-sigma_reg * 2))
        + lattice_mode(grid64, 28, 0) * (2.0 ** (-sigma_reg * 3))
    )
    out = regularity_diagnostic(f, part64)
    assert not out["one_scale"]
    assert out["n_scales"] == 4
    assert abs(out["alpha_hat"] - sigma_reg) <= 1e-9


def test_regularity_single_mode_flag(grid64, part64):
    out = regularity_diagnostic(lattice_mode(grid64, 14, 0), part64)
    assert out["one_scale"] and out["alpha_hat"] is None


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(-1, 3))
def test_cutoff_idempotent(seed, n):
    grid = GridSpec(8.0, 16)
    part = build_partition(grid)
    f = random_field(grid, seed)
    lo = cutoff(f, part, "<=", n)
    twice = cutoff(lo, part, "<=", n)
    # cumulative symbols are not projections pointwise, but they are
    # monotone: cutting twice never increases any coefficient
    assert np.all(np.abs(twice.hat) <= np.abs(lo.hat) + 1e-15)
    hi = cutoff(f, part, ">", n)
    assert l2_norm(lo + hi - f) <= 1e-12 * max(l2_norm(f), 1e-30)
