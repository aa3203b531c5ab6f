"""Bony paraproducts, resonant products and commutators.

All decompositions are exact at the lattice level: para_lt + resonant +
para_gt reassembles the pointwise product to roundoff, because the block
symbols sum to one and the splitting merely regroups the (i, j) block pairs
by i <= j-2, |i-j| <= 1, i >= j+2.

Products inside the decompositions are pointwise by default; dealias=True
routes every block pair through the exact band-limited product, which is
what the operator module uses so that Fourier multipliers satisfy the
product rule exactly.
"""

from __future__ import annotations

import numpy as np

from .dyadic import DyadicPartition, block_stack
from .spectral import Field, inner, multiply


def _pair_product(grid, a: np.ndarray, b: np.ndarray, dealias: bool) -> Field:
    fa = Field(grid, a)
    fb = Field(grid, b)
    return multiply(fa, fb, dealias=dealias)


def _accumulate(grid, pairs, dealias: bool) -> Field:
    """Sum of products over (a, b) array pairs."""
    if not dealias:
        total = None
        for a, b in pairs:
            t = a * b
            total = t if total is None else total + t
        if total is None:
            total = np.zeros((grid.M, grid.M), dtype=np.complex128)
        return Field(grid, total)
    total = None
    for a, b in pairs:
        t = _pair_product(grid, a, b, True)
        total = t if total is None else total + t
    if total is None:
        total = Field(grid, np.zeros((grid.M, grid.M), dtype=np.complex128))
    return total


def _stacks(f: Field, g: Field, partition: DyadicPartition):
    return block_stack(f, partition), block_stack(g, partition)


def para_lt(f: Field, g: Field, partition: DyadicPartition, dealias: bool = False) -> Field:
    """Paraproduct f low, g high: sum_j S_{j-1} f . Delta_j g.

    S_{j-1} sums the blocks i <= j-2; the first contributing scale is j = 1.
    """
    bf, bg = _stacks(f, g, partition)
    return para_lt_from_stacks(f.grid, bf, bg, dealias)


def para_lt_from_stacks(grid, bf: np.ndarray, bg: np.ndarray, dealias: bool = False) -> Field:
    n = bf.shape[0]
    pairs = []
    low = np.zeros_like(bf[0])
    for idx in range(2, n):  # idx = j + 1, so j >= 1
        low = low + bf[idx - 2]  # fresh array per scale
        pairs.append((low, bg[idx]))
    return _accumulate(grid, pairs, dealias)


def para_gt(f: Field, g: Field, partition: DyadicPartition, dealias: bool = False) -> Field:
    """Paraproduct f high, g low: equals para_lt(g, f)."""
    return para_lt(g, f, partition, dealias)


def resonant(f: Field, g: Field, partition: DyadicPartition, dealias: bool = False) -> Field:
    """Resonant part: sum over |i-j| <= 1 of Delta_i f . Delta_j g (symmetric)."""
    bf, bg = _stacks(f, g, partition)
    return resonant_from_stacks(f.grid, bf, bg, dealias)


def resonant_from_stacks(grid, bf: np.ndarray, bg: np.ndarray, dealias: bool = False) -> Field:
    n = bf.shape[0]
    pairs = []
    for i in range(n):
        lo = max(0, i - 1)
        hi = min(n, i + 2)
        near = bg[lo:hi].sum(axis=0)
        pairs.append((bf[i], near))
    return _accumulate(grid, pairs, dealias)


def para_leq(f: Field, g: Field, partition: DyadicPartition, dealias: bool = False) -> Field:
    """f below-or-resonant: para_lt(f, g) + resonant(f, g)."""
    return para_lt(f, g, partition, dealias) + resonant(f, g, partition, dealias)


def para_geq(f: Field, g: Field, partition: DyadicPartition, dealias: bool = False) -> Field:
    """f above-or-resonant: para_gt(f, g) + resonant(f, g)."""
    return para_gt(f, g, partition, dealias) + resonant(f, g, partition, dealias)


def commutator_C(f: Field, g: Field, h: Field, partition: DyadicPartition,
                 dealias: bool = False) -> Field:
    """C(f, g, h) = (f para< g) resonant h - f . (g resonant h)."""
    fg = para_lt(f, g, partition, dealias)
    left = resonant(fg, h, partition, dealias)
    gh = resonant(g, h, partition, dealias)
    right = multiply(f, gh, dealias=dealias)
    return left - right


def commutator_CN(f: Field, g: Field, h: Field, N: int, partition: DyadicPartition,
                  dealias: bool = False) -> Field:
    """C_N(f, g, h) = (Delta_{>N}(f para< g)) resonant h - f . (g resonant h).

    For N below every scale this is commutator_C; for N at or above the top
    scale the first term vanishes and C_N = -f (g resonant h).
    """
    from .dyadic import cutoff

    fg = para_lt(f, g, partition, dealias)
    fg_hi = cutoff(fg, partition, ">", N)
    left = resonant(fg_hi, h, partition, dealias)
    gh = resonant(g, h, partition, dealias)
    right = multiply(f, gh, dealias=dealias)
    return left - right


def bilinear_D(f: Field, g: Field, h: Field, partition: DyadicPartition,
               dealias: bool = False) -> complex:
    """Scalar pairing D(f, g, h) = <f, h resonant g> - <f para< g, h>."""
    hg = resonant(h, g, partition, dealias)
    fg = para_lt(f, g, partition, dealias)
    return inner(f, hg) - inner(fg, h)
