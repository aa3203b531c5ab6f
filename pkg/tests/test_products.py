"""Paraproduct decomposition and commutator identities.

The decomposition identities are exact at machine precision on any grid, so
these are property tests. Pure closed-form cases put one factor entirely in
the low block and the other on a single annulus plateau, where every
paraproduct term collapses to an explicit pointwise product.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anderson2d import (
    Field,
    GridSpec,
    bilinear_D,
    block,
    build_partition,
    commutator_C,
    commutator_CN,
    inner,
    l2_norm,
    multiply,
    para_geq,
    para_gt,
    para_leq,
    para_lt,
    resonant,
)

from conftest import random_field


def lattice_mode(grid, mx, my):
    k = 2.0 * np.pi / grid.L
    X, Y = grid.meshgrid_x()
    return Field(grid, np.exp(1j * k * (mx * X + my * Y)))


def low_band(f, frac=8):
    """Crop hat to |m| <= M // frac per axis so products stay in band."""
    M = f.grid.M
    m = np.fft.fftfreq(M, d=1.0 / M).astype(int)
    keep = (np.abs(m)[:, None] <= M // frac) & (np.abs(m)[None, :] <= M // frac)
    return Field(f.grid, np.where(keep, f.hat, 0.0), "frequency")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), dealias=st.booleans())
def test_bony_decomposition(seed, dealias):
    grid = GridSpec(8.0, 16)
    part = build_partition(grid)
    f = random_field(grid, seed)
    g = random_field(grid, seed + 1)
    total = (
        para_lt(f, g, part, dealias)
        + para_gt(f, g, part, dealias)
        + resonant(f, g, part, dealias)
    )
    prod = multiply(f, g, dealias=dealias)
    assert l2_norm(total - prod) <= 1e-12 * max(l2_norm(prod), 1.0)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_para_transpose_and_closures(seed):
    grid = GridSpec(8.0, 16)
    part = build_partition(grid)
    f = random_field(grid, seed)
    g = random_field(grid, seed + 7)
    gt = para_gt(f, g, part)
    lt_swapped = para_lt(g, f, part)
    assert l2_norm(gt - lt_swapped) <= 1e-13 * max(l2_norm(gt), 1.0)
    prod = multiply(f, g)
    assert l2_norm(para_leq(f, g, part) + para_gt(f, g, part) - prod) <= 1e-12 * l2_norm(prod)
    assert l2_norm(para_geq(f, g, part) + para_lt(f, g, part) - prod) <= 1e-12 * l2_norm(prod)


def test_pure_case_low_times_plateau(grid32, part32):
    # f lives in the low block only, g on the plateau of block 2:
    # S_{j-1} f = f, so f para< g is the full product and the other
    # two terms vanish.
    f = lattice_mode(grid32, 1, 0)
    g = lattice_mode(grid32, 14, 0)
    lt = para_lt(f, g, part32)
    expected = f.space * g.space
    assert np.abs(lt.space - expected).max() <= 1e-12
    assert l2_norm(para_gt(f, g, part32)) <= 1e-13
    assert l2_norm(resonant(f, g, part32)) <= 1e-13


def test_resonant_adjacent_blocks(grid32, part32):
    # plateau modes of blocks 1 and 2 interact (|i - j| = 1), while
    # blocks 0 and 2 do not
    g1 = lattice_mode(grid32, 7, 0)
    g2 = lattice_mode(grid32, 14, 0)
    g0 = lattice_mode(grid32, 2, 3)
    r12 = resonant(g1, g2, part32)
    assert np.abs(r12.space - g1.space * g2.space).max() <= 1e-12
    assert l2_norm(resonant(g0, g2, part32)) <= 1e-13


def test_commutator_cn_low_limit(grid16, part16):
    f = random_field(grid16, 11)
    g = random_field(grid16, 12)
    h = random_field(grid16, 13)
    base = commutator_C(f, g, h, part16)
    for N in (-2, -5):
        cn = commutator_CN(f, g, h, N, part16)
        assert np.abs(cn.space - base.space).max() <= 1e-13 * np.abs(base.space).max()


def test_commutator_cn_high_limit(grid16, part16):
    f = random_field(grid16, 21)
    g = random_field(grid16, 22)
    h = random_field(grid16, 23)
    gh = resonant(g, h, part16)
    expected = -f.space * gh.space
    for N in (part16.j_max, part16.j_max + 3):
        cn = commutator_CN(f, g, h, N, part16)
        assert np.abs(cn.space - expected).max() <= 1e-12 * np.abs(expected).max()


def test_bilinear_d_pure_case(grid32, part32):
    # f low-block, g single-plateau, h restricted to the same annulus:
    # f para< g = f g and h resonant g = h g, so the pairing reduces to
    # an explicit lattice sum
    f = lattice_mode(grid32, 1, 0)
    g = lattice_mode(grid32, 14, 0)
    h = block(random_field(grid32, 31), part32, 2)
    d = bilinear_D(f, g, h, part32)
    cell = (grid32.L / grid32.M) ** 2
    expected = cell * np.sum(
        np.conj(f.space) * h.space * (g.space - np.conj(g.space))
    )
    assert abs(d - expected) <= 1e-12 * max(abs(expected), 1.0)
    # real g makes the two pairings cancel exactly
    g_real = Field(grid32, g.space.real.astype(np.complex128))
    assert abs(bilinear_D(f, g_real, h, part32)) <= 1e-12


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_dealias_inert_on_low_band(seed):
    # products of fields in the inner third of the band never alias,
    # so the dealiased paraproducts match the plain ones
    grid = GridSpec(8.0, 32)
    part = build_partition(grid)
    f = low_band(random_field(grid, seed), frac=8)
    g = low_band(random_field(grid, seed + 3), frac=8)
    for op in (para_lt, para_gt, resonant):
        plain = op(f, g, part, False)
        cut = op(f, g, part, True)
        assert l2_norm(plain - cut) <= 1e-13 * max(l2_norm(plain), 1e-30)


def test_inner_pairing_consistency(grid16, part16):
    # <f para< g, h> + <f, ...> arrangement used by the scalar pairing
    f = random_field(grid16, 41)
    g = random_field(grid16, 42)
    h = random_field(grid16, 43)
    d = bilinear_D(f, g, h, part16)
    direct = inner(f, resonant(h, g, part16)) - inner(para_lt(f, g, part16), h)
    assert abs(d - direct) <= 1e-12 * max(abs(direct), 1.0)
