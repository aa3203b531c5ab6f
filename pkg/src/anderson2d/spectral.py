"""Periodic spectral core on the centered square box.

Fields live on the uniform M x M lattice of the box [-L/2, L/2)^2 with
periodic boundary conditions.  The frequency lattice is (2*pi/L) * Z^2 in
the usual FFT layout.  Transforms are unitary: with f_hat the coefficient
array, sum_k |f_hat(k)|^2 equals the discrete L^2 norm h^2 * sum_x |f(x)|^2,
so Parseval holds exactly up to roundoff.

In these units a single mode exp(i k.x) has coefficient L at k and zero
elsewhere, f(x) = (1/L) sum_k f_hat(k) exp(i k.x) at the grid points, and
the transform of a periodic convolution is L * f_hat * g_hat.  Coefficients
are phased to the centered origin, so these identities hold literally for
the x axis running over [-L/2, L/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Set the worker count passed to scipy.fft (default 1, deterministic)."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


def _fft2(a):
    return _fft.fft2(a, workers=_FFT_WORKERS)


def _ifft2(a):
    return _fft.ifft2(a, workers=_FFT_WORKERS)


@lru_cache(maxsize=32)
def _center_phase(M: int) -> np.ndarray:
    # (-1)^(qx+qy): translates coefficients to the centered x origin
    s = 1.0 - 2.0 * (np.arange(M) % 2)
    return np.outer(s, s)


def _space_from_hat(hat: np.ndarray, grid: GridSpec) -> np.ndarray:
    ph = _center_phase(grid.M)
    return _ifft2(hat * ph) * (grid.L / grid.cell_area)


def _hat_from_space(vals: np.ndarray, grid: GridSpec) -> np.ndarray:
    ph = _center_phase(grid.M)
    return _fft2(vals) * (grid.cell_area / grid.L) * ph


def batch_ifft2(hats: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Inverse transform a stack of coefficient arrays to space values."""
    ph = _center_phase(grid.M)
    return _fft.ifft2(hats * ph, axes=(-2, -1), workers=_FFT_WORKERS) * (
        grid.L / grid.cell_area
    )


def batch_fft2(vals: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Forward transform a stack of space-value arrays to coefficients."""
    ph = _center_phase(grid.M)
    return _fft.fft2(vals, axes=(-2, -1), workers=_FFT_WORKERS) * (
        grid.cell_area / grid.L
    ) * ph


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-L/2, L/2)^2 with M points per axis (M even)."""

    L: float
    M: int

    def __post_init__(self):
        if self.M % 2 != 0 or self.M < 4:
            raise ValueError(f"M must be even and >= 4, got {self.M}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def axis_x(self) -> np.ndarray:
        return -self.L / 2 + self.h * np.arange(self.M)

    def axis_k(self) -> np.ndarray:
        # FFT layout: 0, 1, ..., M/2-1, -M/2, ..., -1 times 2*pi/L
        return 2 * np.pi / self.L * _fft.fftfreq(self.M, d=1.0 / self.M)

    def meshgrid_x(self):
        x = self.axis_x()
        return np.meshgrid(x, x, indexing="ij")

    def meshgrid_k(self):
        k = self.axis_k()
        return np.meshgrid(k, k, indexing="ij")

    def abs_x(self) -> np.ndarray:
        X, Y = self.meshgrid_x()
        return np.hypot(X, Y)

    def abs_k(self) -> np.ndarray:
        KX, KY = self.meshgrid_k()
        return np.hypot(KX, KY)

    def k_squared(self) -> np.ndarray:
        KX, KY = self.meshgrid_k()
        return KX**2 + KY**2

    @property
    def k_max_axis(self) -> float:
        return 2 * np.pi / self.L * (self.M / 2)

    @property
    def k_max_corner(self) -> float:
        return self.k_max_axis * np.sqrt(2.0)


# cached geometry arrays keyed by (L, M); grids are tiny compared to fields
@lru_cache(maxsize=32)
def _geom(L: float, M: int):
    g = GridSpec(L, M)
    return {
        "abs_x": g.abs_x(),
        "abs_k": g.abs_k(),
        "k2": g.k_squared(),
        "kx": g.meshgrid_k()[0],
        "ky": g.meshgrid_k()[1],
    }


def grid_abs_x(grid: GridSpec) -> np.ndarray:
    return _geom(grid.L, grid.M)["abs_x"]


def grid_abs_k(grid: GridSpec) -> np.ndarray:
    return _geom(grid.L, grid.M)["abs_k"]


def grid_k2(grid: GridSpec) -> np.ndarray:
    return _geom(grid.L, grid.M)["k2"]


@lru_cache(maxsize=32)
def _sym_band_keep(M: int) -> np.ndarray:
    q = np.fft.fftfreq(M, 1.0 / M).astype(int)
    keep = np.abs(q) <= M // 2 - 1
    return np.outer(keep, keep).astype(np.float64)


def symmetric_band_mask(grid: GridSpec) -> np.ndarray:
    """Indicator of modes below the unpaired per-axis Nyquist line.

    With M even, the -M/2 line has no +M/2 partner, so a real field with
    content there has a complex trigonometric interpolant and band-limited
    multiplication against it is not exactly symmetric.  Restricting static
    fields to this mask keeps their off-grid extensions real.
    """
    return _sym_band_keep(grid.M)


class Field:
    """Immutable complex field on a GridSpec, in space or frequency representation.

    Both representations are cached after first use; ``space`` and ``hat``
    return read-only arrays.  Round-tripping space -> frequency -> space is
    exact to roundoff (tested at 1e-12).
    """

    __slots__ = ("grid", "_space", "_hat")

    def __init__(self, grid: GridSpec, values: np.ndarray, representation: str = "space"):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (grid.M, grid.M):
            raise ValueError(f"values shape {values.shape} != {(grid.M, grid.M)}")
        self.grid = grid
        if representation == "space":
            self._space = values
            self._hat = None
        elif representation == "frequency":
            self._space = None
            self._hat = values
        else:
            raise ValueError(f"unknown representation {representation!r}")

    @property
    def space(self) -> np.ndarray:
        if self._space is None:
            self._space = _space_from_hat(self._hat, self.grid)
        return self._space

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            self._hat = _hat_from_space(self._space, self.grid)
        return self._hat

    @property
    def representation(self) -> str:
        return "space" if self._space is not None else "frequency"

    def __add__(self, other):
        _check_same_grid(self, other)
        return Field(self.grid, self.space + other.space)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return Field(self.grid, self.space - other.space)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            raise TypeError("use multiply(f, g) for field products")
        return Field(self.grid, self.space * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.space)

    def conj(self) -> "Field":
        return Field(self.grid, np.conj(self.space))

    def real_part(self) -> "Field":
        return Field(self.grid, self.space.real.astype(np.complex128))


def _check_same_grid(f: Field, g: Field):
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def field_from_function(grid: GridSpec, fn) -> Field:
    X, Y = grid.meshgrid_x()
    return Field(grid, np.asarray(fn(X, Y), dtype=np.complex128))


def transform(f: Field) -> Field:
    """Return the same field in the other representation (pure, cached)."""
    if f.representation == "space":
        return Field(f.grid, f.hat, "frequency")
    return Field(f.grid, f.space, "space")


def apply_multiplier(f: Field, m) -> Field:
    """Apply a Fourier multiplier.

    Parameters
    ----------
    f : Field
    m : ndarray of shape (M, M) in FFT layout, or a callable m(kx, ky).

    Returns a new Field; composition of multipliers equals the multiplier of
    the pointwise product of symbols exactly.
    """
    if callable(m):
        g = _geom(f.grid.L, f.grid.M)
        m = m(g["kx"], g["ky"])
    return Field(f.grid, f.hat * m, "frequency")


def laplacian(f: Field) -> Field:
    return Field(f.grid, f.hat * (-grid_k2(f.grid)), "frequency")


def gradient(f: Field):
    g = _geom(f.grid.L, f.grid.M)
    return (
        Field(f.grid, f.hat * (1j * g["kx"]), "frequency"),
        Field(f.grid, f.hat * (1j * g["ky"]), "frequency"),
    )


def bessel_inverse(f: Field, order: float = 1.0) -> Field:
    """Apply (1 - Laplacian)^(-order)."""
    sym = (1.0 + grid_k2(f.grid)) ** (-order)
    return Field(f.grid, f.hat * sym, "frequency")


def multiply(f: Field, g: Field, dealias: bool = False) -> Field:
    """Pointwise product of two fields.

    With dealias=True the product is computed on a doubled grid and truncated
    back, i.e. the exact band-limited (Galerkin) product; pairwise products
    are then free of aliasing and Fourier multipliers commute with the
    product rule exactly.
    """
    _check_same_grid(f, g)
    if not dealias:
        return Field(f.grid, f.space * g.space)
    grid = f.grid
    M = grid.M
    fine = GridSpec(grid.L, 2 * M)
    fa = _pad_hat(f.hat, M)
    ga = _pad_hat(g.hat, M)
    prod_fine = _space_from_hat(fa, fine) * _space_from_hat(ga, fine)
    return Field(grid, _crop_hat(_hat_from_space(prod_fine, fine), M), "frequency")


def _pad_hat(hat: np.ndarray, M: int) -> np.ndarray:
    # unitary coefficients are grid independent, so embedding is plain copy
    out = np.zeros((2 * M, 2 * M), dtype=np.complex128)
    half = M // 2
    out[:half, :half] = hat[:half, :half]
    out[:half, -half:] = hat[:half, -half:]
    out[-half:, :half] = hat[-half:, :half]
    out[-half:, -half:] = hat[-half:, -half:]
    return out


def _crop_hat(hat_fine: np.ndarray, M: int) -> np.ndarray:
    half = M // 2
    out = np.zeros((M, M), dtype=np.complex128)
    out[:half, :half] = hat_fine[:half, :half]
    out[:half, -half:] = hat_fine[:half, -half:]
    out[-half:, :half] = hat_fine[-half:, :half]
    out[-half:, -half:] = hat_fine[-half:, -half:]
    return out


def convolve(f: Field, g: Field) -> Field:
    """Periodic convolution (f * g)(x) = integral f(y) g(x-y) dy.

    Both coefficient arrays carry the centered-origin phase, so the plain
    hat product would come out translated by half a box; one phase factor
    has to be stripped.
    """
    _check_same_grid(f, g)
    phase = _center_phase(f.grid.M)
    return Field(f.grid, f.grid.L * f.hat * g.hat * phase, "frequency")


def inner(f: Field, g: Field) -> complex:
    """L^2 inner product, conjugate-linear in the first slot."""
    _check_same_grid(f, g)
    return complex(f.grid.cell_area * np.vdot(f.space, g.space))


def l2_norm(f: Field) -> float:
    return float(np.sqrt(f.grid.cell_area) * np.linalg.norm(f.space))


def lp_norm(f: Field, p: float) -> float:
    if p == np.inf:
        return float(np.max(np.abs(f.space)))
    a = np.abs(f.space) ** p
    return float((f.grid.cell_area * a.sum()) ** (1.0 / p))


def japanese_bracket(grid: GridSpec, delta: float) -> np.ndarray:
    """Samples of <x>^delta = (1 + |x|^2)^(delta/2) on the grid."""
    ax = grid_abs_x(grid)
    return (1.0 + ax**2) ** (delta / 2.0)


@dataclass(frozen=True)
class WeightProfile:
    """Polynomial weight <x>^delta sampled on a grid."""

    grid: GridSpec
    delta: float
    values: np.ndarray = dataclass_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", japanese_bracket(self.grid, self.delta))


def weighted_norm(f: Field, p: float = 2.0, s: float = 0.0, delta: float = 0.0) -> float:
    """|| <x>^delta (1-Laplacian)^(s/2) f ||_{L^p}.

    The smoothness parameter s is only meaningful in the L^2 pairing, so
    s != 0 requires p == 2.
    """
    if s != 0.0 and p != 2.0:
        raise ValueError("s != 0 requires p = 2")
    g = f
    if s != 0.0:
        g = bessel_inverse(f, order=-s / 2.0)
    if delta == 0.0:
        return lp_norm(g, p)
    w = japanese_bracket(f.grid, delta)
    return lp_norm(Field(f.grid, g.space * w), p)


def sobolev_norm(f: Field, s: float) -> float:
    """H^s norm via the (1+|k|^2)^(s/2) multiplier (unweighted)."""
    sym = (1.0 + grid_k2(f.grid)) ** (s / 2.0)
    return float(np.linalg.norm(f.hat * sym))
