"""Shared small-venue fixtures.

Contexts are session scoped: calibration is deterministic, so every test
sees the same operator, and the M = 32 builds are paid once.
"""

import numpy as np
import pytest

from anderson2d import (
    GridSpec,
    MollifierSigma,
    build_context,
    build_enhanced,
    build_partition,
    sample_white_noise,
    zero_enhanced,
)


@pytest.fixture(scope="session")
def sigma():
    return MollifierSigma()


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(8.0, 16)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(16.0, 32)


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(16.0, 64)


@pytest.fixture(scope="session")
def part16(grid16):
    return build_partition(grid16)


@pytest.fixture(scope="session")
def part32(grid32):
    return build_partition(grid32)


@pytest.fixture(scope="session")
def part64(grid64):
    return build_partition(grid64)


@pytest.fixture(scope="session")
def enh32(grid32, part32, sigma):
    return build_enhanced(sample_white_noise(grid32, 0), sigma, 0.25, part32)


@pytest.fixture(scope="session")
def ctx32(enh32, part32):
    return build_context(enh32, part32)


@pytest.fixture(scope="session")
def zctx32(grid32, part32):
    return build_context(zero_enhanced(grid32), part32)


def random_field(grid, seed, complex_valued=True):
    """Plain random space-domain field, no spectral shaping."""
    from anderson2d import Field

    rng = np.random.Generator(np.random.PCG64(seed))
    vals = rng.standard_normal((grid.M, grid.M))
    if complex_valued:
        vals = vals + 1j * rng.standard_normal((grid.M, grid.M))
    return Field(grid, vals.astype(np.complex128))
