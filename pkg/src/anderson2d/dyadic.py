"""Littlewood-Paley dyadic analysis on the periodic frequency lattice.

The partition is built by telescoping a single radial profile: chi is a
smooth bump equal to 1 on |t| <= 3/4 and supported in |t| <= 4/3, and the
annulus profile is rho(t) = chi(t/2) - chi(t), supported in 3/4 <= |t| <= 8/3.
Then chi + sum_{j>=0} rho(2^-j t) telescopes to 1 exactly, and consecutive
annuli are the only overlapping pairs.

On a finite lattice the dyadic scales stop at the Nyquist shell; the top
block is defined as 1 minus the cumulative sum below it, so it absorbs the
corner tail and block reconstruction is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    Field,
    GridSpec,
    batch_ifft2,
    grid_abs_k,
    gradient,
    japanese_bracket,
    l2_norm,
)

# radii of the base profiles
CHI_FLAT = 0.75   # chi == 1 on [0, CHI_FLAT]
CHI_SUPP = 4.0 / 3.0
RHO_INNER = 0.75
RHO_OUTER = 8.0 / 3.0


def _smooth_step(s: np.ndarray) -> np.ndarray:
    # C^infinity transition built from exp(-1/s): 1 at s<=0, 0 at s>=1
    s = np.asarray(s, dtype=np.float64)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        a = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
        b = np.where(s > 0.0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
    return a / (a + b)


def chi_profile(t) -> np.ndarray:
    """Radial low-frequency bump: 1 on [0, 3/4], 0 outside [0, 4/3]."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    return _smooth_step((t - CHI_FLAT) / (CHI_SUPP - CHI_FLAT))


def rho_profile(t) -> np.ndarray:
    """Annulus profile chi(t/2) - chi(t), supported in [3/4, 8/3]."""
    t = np.asarray(t, dtype=np.float64)
    return chi_profile(t / 2.0) - chi_profile(t)


@dataclass(frozen=True)
class DyadicPartition:
    """Dyadic block multipliers for one grid.

    Blocks are indexed j = -1, 0, ..., j_max.  Block -1 is chi(|k|), block
    j < j_max is rho(2^-j |k|), and block j_max is the Nyquist absorber
    1 - chi(2^-j_max |k|).  The symbols sum to 1 at every lattice point.
    """

    grid: GridSpec
    j_max: int
    symbols: np.ndarray  # shape (j_max + 2, M, M), index 0 is block -1

    @property
    def n_blocks(self) -> int:
        return self.j_max + 2

    def symbol(self, j: int) -> np.ndarray:
        if j < -1 or j > self.j_max:
            raise ValueError(f"block index {j} outside [-1, {self.j_max}]")
        return self.symbols[j + 1]

    def cumulative_symbol(self, N: int) -> np.ndarray:
        """Symbol of Delta_{<=N}, exactly the partial sum of block symbols."""
        if N < -1:
            return np.zeros_like(self.symbols[0])
        if N >= self.j_max:
            return np.ones_like(self.symbols[0])
        absk = grid_abs_k(self.grid)
        return chi_profile(absk / 2.0 ** (N + 1))


def build_partition(grid: GridSpec) -> DyadicPartition:
    """Build the dyadic partition for a grid.

    Raises ValueError when the lattice cannot hold two annular scales
    (j_max < 1); the number of scales grows like ceil(log2 k_max) + O(1).
    """
    kc = grid.k_max_corner
    # smallest j whose natural annulus [0.75*2^j, 8/3*2^j] reaches the corner
    j_max = max(0, math.ceil(math.log2(kc / RHO_OUTER)))
    if j_max < 1:
        raise ValueError(
            f"grid L={grid.L} M={grid.M} too small for two annular scales "
            f"(corner frequency {kc:.3f})"
        )
    absk = grid_abs_k(grid)
    symbols = np.empty((j_max + 2, grid.M, grid.M), dtype=np.float64)
    symbols[0] = chi_profile(absk)
    for j in range(0, j_max):
        symbols[j + 1] = rho_profile(absk / 2.0**j)
    # top block absorbs the Nyquist tail: exact complement of the rest
    symbols[j_max + 1] = 1.0 - chi_profile(absk / 2.0**j_max)
    return DyadicPartition(grid, j_max, symbols)


def block(f: Field, partition: DyadicPartition, j: int) -> Field:
    """Littlewood-Paley block Delta_j f."""
    return Field(f.grid, f.hat * partition.symbol(j), "frequency")


def block_stack(f: Field, partition: DyadicPartition) -> np.ndarray:
    """Space values of all blocks, shape (n_blocks, M, M); index 0 is j=-1."""
    hats = f.hat[None, :, :] * partition.symbols
    return batch_ifft2(hats, f.grid)


def cutoff(f: Field, partition: DyadicPartition, mode: str, N: int) -> Field:
    """Frequency cutoff Delta_{mode N} with mode one of '>', '>=', '<=', '<'.

    Cutoffs are exact sums of block symbols, so cutoff('<=', N) plus
    cutoff('>', N) reconstructs f to roundoff.
    """
    if mode == "<=":
        sym = partition.cumulative_symbol(N)
    elif mode == "<":
        sym = partition.cumulative_symbol(N - 1)
    elif mode == ">":
        sym = 1.0 - partition.cumulative_symbol(N)
    elif mode == ">=":
        sym = 1.0 - partition.cumulative_symbol(N - 1)
    else:
        raise ValueError(f"unknown cutoff mode {mode!r}")
    return Field(f.grid, f.hat * sym, "frequency")


def besov_norm(
    f: Field,
    partition: DyadicPartition,
    alpha: float,
    p: float = np.inf,
    q: float = np.inf,
    delta: float = 0.0,
    window_mask: np.ndarray | None = None,
) -> float:
    """Weighted Besov norm (sum_j (2^(j alpha) ||<x>^delta Delta_j f||_p)^q)^(1/q).

    q = inf takes the sup over scales.  An optional boolean window mask
    restricts the spatial norm to part of the box (used by the convergence
    studies that measure on the evaluation window).
    """
    w = None
    if delta != 0.0:
        w = japanese_bracket(f.grid, delta)
    stack = block_stack(f, partition)
    terms = []
    for idx in range(partition.n_blocks):
        j = idx - 1
        vals = stack[idx]
        if w is not None:
            vals = vals * w
        if window_mask is not None:
            a = np.abs(vals[window_mask])
        else:
            a = np.abs(vals)
        if p == np.inf:
            nrm = float(a.max()) if a.size else 0.0
        else:
            nrm = float((f.grid.cell_area * (a**p).sum()) ** (1.0 / p))
        terms.append(2.0 ** (j * alpha) * nrm)
    terms = np.asarray(terms)
    if q == np.inf:
        return float(terms.max())
    return float((terms**q).sum() ** (1.0 / q))


def bernstein_check(f: Field, partition: DyadicPartition, j: int) -> dict:
    """Measure the Bernstein ratios for a single block.

    For g = Delta_j f the support bounds give the exact operator inequalities
    ||grad g||_2 <= b 2^j ||g||_2 (direct) and, for the annular blocks,
    ||g||_2 <= (1/a) 2^-j ||grad g||_2 (reverse), with a = 3/4, b = 8/3
    (the top absorber extends to the lattice corner instead of b 2^j).
    """
    g = block(f, partition, j)
    gx, gy = gradient(g)
    grad = np.sqrt(l2_norm(gx) ** 2 + l2_norm(gy) ** 2)
    nrm = l2_norm(g)
    lam = 2.0**j
    out = {"j": j, "norm": nrm, "grad_norm": grad}
    if nrm == 0.0:
        out["direct_ratio"] = 0.0
        out["reverse_ratio"] = 0.0
        return out
    out["direct_ratio"] = grad / (lam * nrm)  # <= b (or corner/2^j for the top block)
    out["reverse_ratio"] = (lam * nrm) / grad if grad > 0 else np.inf
    return out


def scaling_slope(norms_by_scale: dict[int, float]) -> tuple[float, int]:
    """Least-squares slope of log2(norm) against the scale index.

    Returns (slope, n_scales_used); scales with vanishing norm are skipped.
    """
    js, vals = [], []
    for j, v in sorted(norms_by_scale.items()):
        if v > 0.0:
            js.append(j)
            vals.append(math.log2(v))
    if len(js) < 2:
        return 0.0, len(js)
    js_arr = np.asarray(js, dtype=np.float64)
    vals_arr = np.asarray(vals, dtype=np.float64)
    slope = np.polyfit(js_arr, vals_arr, 1)[0]
    return float(slope), len(js)
