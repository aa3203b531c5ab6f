"""White-noise sampling, mollification and the two-regime decomposition.

A realization is sampled directly in frequency: independent Gaussian
coefficients with Hermitian symmetry, unit variance per mode in unitary
coefficients (equivalently 1/L^2 per Fourier-series mode), so that
E[Y(phi) Y(psi)] = <phi, psi> for real test fields.

The decomposition splits a mollified realization into an irregular part xi
that keeps high frequencies near the origin and progressively fewer toward
the box edge, plus a smooth remainder eta = Y_eps - xi that grows at most
quadratically.  The split is organized by dyadic spatial annuli w_n and
per-annulus frequency floors L_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .dyadic import DyadicPartition, block_stack, chi_profile, rho_profile, scaling_slope
from .spectral import (
    Field,
    GridSpec,
    grid_abs_k,
    grid_abs_x,
    japanese_bracket,
    symmetric_band_mask,
)

# exclusion radii of the spatial annuli, shared with the frequency profiles
_W_INNER = 0.75


class MollifierSigma:
    """Radial mollifier profile: 1 on [0, 1/2], smooth, supported in [0, 1]."""

    def __call__(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=np.float64))
        s = 2.0 * t - 1.0
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            a = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
            b = np.where(s > 0.0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        return a / (a + b)

    def symbol(self, grid: GridSpec, eps: float) -> np.ndarray:
        """Multiplier sigma(eps |k|) on the frequency lattice."""
        if eps == 0.0:
            return np.ones((grid.M, grid.M))
        return self(eps * grid_abs_k(grid))


@dataclass(frozen=True)
class DecompositionParams:
    """Spatial-annulus frequency floors L_n = ceil(eps2 * n)."""

    eps2: float = 1.0

    def level(self, n: int) -> int:
        # n >= 1; rounding up keeps the floors integer block indices
        return math.ceil(self.eps2 * n)


def space_weights(grid: GridSpec) -> np.ndarray:
    """Dyadic spatial partition of unity on the box, shape (n_w, M, M).

    w_1 = chi(|x|) and w_n = rho(2^-(n-2) |x|) for n >= 2; annuli whose inner
    radius exceeds the box corner are dropped, and the retained weights still
    sum to one at every grid point.
    """
    ax = grid_abs_x(grid)
    xmax = float(ax.max())
    j_top = max(0, math.floor(math.log2(xmax / _W_INNER)))
    weights = [chi_profile(ax)]
    for j in range(0, j_top + 1):
        weights.append(rho_profile(ax / 2.0**j))
    return np.stack(weights)


def decomposition_pieces(grid: GridSpec, params: DecompositionParams):
    """Weights stack and per-annulus frequency floors used by decompose."""
    w = space_weights(grid)
    levels = [params.level(n) for n in range(1, w.shape[0] + 1)]
    return w, levels


@dataclass(frozen=True)
class NoiseRealization:
    """One white-noise sample: Hermitian coefficients plus its seed."""

    grid: GridSpec
    seed: int
    hat: np.ndarray = dataclass_field(repr=False)

    @property
    def field(self) -> Field:
        return Field(self.grid, self.hat, "frequency")


def sample_white_noise(grid: GridSpec, seed: int) -> NoiseRealization:
    """Sample spatial white noise with unit per-mode coefficient variance.

    Coefficients satisfy hat(-k) = conj(hat(k)) exactly, so the space values
    are real up to roundoff; self-paired modes come out real automatically.
    The unpaired Nyquist lines are excluded (zero variance there): that keeps
    every field built from the noise exactly symmetric under band-limited
    multiplication, at the cost of one frequency shell of the regularization.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    gauss = rng.standard_normal((grid.M, grid.M, 2))
    a = (gauss[..., 0] + 1j * gauss[..., 1]) / np.sqrt(2.0)
    idx = (-np.arange(grid.M)) % grid.M
    a_neg = a[np.ix_(idx, idx)]
    hat = (a + np.conj(a_neg)) / np.sqrt(2.0) * symmetric_band_mask(grid)
    return NoiseRealization(grid, seed, hat)


def mollify(noise: NoiseRealization | Field, sigma: MollifierSigma, eps: float) -> Field:
    """Apply the radial mollifier at scale eps; eps = 0 is the identity."""
    f = noise.field if isinstance(noise, NoiseRealization) else noise
    sym = sigma.symbol(f.grid, eps)
    return Field(f.grid, f.hat * sym, "frequency")


def decompose(
    y_eps: Field,
    partition: DyadicPartition,
    params: DecompositionParams,
) -> tuple[Field, Field]:
    """Split a mollified realization into (xi, eta) with xi + eta = Y_eps exactly.

    xi = sum_n w_n . Delta_{>= L_n} Y_eps keeps high frequencies everywhere
    but removes low blocks near the box edge; eta is the exact complement.
    """
    grid = y_eps.grid
    w, levels = decomposition_pieces(grid, params)
    xi_vals = np.zeros((grid.M, grid.M), dtype=np.complex128)
    for n in range(w.shape[0]):
        sym = 1.0 - partition.cumulative_symbol(levels[n] - 1)
        hi = Field(grid, y_eps.hat * sym, "frequency")
        xi_vals += w[n] * hi.space
    xi = Field(grid, xi_vals)
    eta = Field(grid, y_eps.space - xi_vals)
    return xi, eta


def regularity_diagnostic(
    f: Field,
    partition: DyadicPartition,
    delta: float = 0.0,
) -> dict:
    """Estimate a Besov-type regularity exponent from block sup norms.

    Fits log2 ||<x>^delta Delta_j f||_inf against j over the annular scales
    and returns alpha_hat = -slope.  Fields carried by one or two scales only
    (a single mode, say) set the one_scale flag instead of fitting.
    """
    stack = block_stack(f, partition)
    w = None
    if delta != 0.0:
        w = japanese_bracket(f.grid, delta)
    norms = {}
    for idx in range(1, partition.n_blocks):  # annular scales j >= 0
        vals = stack[idx]
        if w is not None:
            vals = vals * w
        norms[idx - 1] = float(np.abs(vals).max())
    peak = max(norms.values()) if norms else 0.0
    active = [j for j, v in norms.items() if v > 1e-13 * peak]
    if len(active) <= 2:
        return {"alpha_hat": None, "slope": None, "n_scales": len(active), "one_scale": True}
    slope, used = scaling_slope({j: norms[j] for j in active})
    return {"alpha_hat": -slope, "slope": slope, "n_scales": used, "one_scale": False}
