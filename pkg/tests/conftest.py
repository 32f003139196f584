import numpy as np
import pytest

from gkdvb.spectral import Field, make_grid


def band_limited(grid, seed, cutoff=None, localized=False):
    """Random real field from modes |k| <= cutoff; optionally Gaussian-windowed."""
    rng = np.random.default_rng(seed)
    n = grid.n_points
    cutoff = cutoff or n // 8
    v = np.zeros(n // 2 + 1, dtype=complex)
    v[1 : cutoff + 1] = rng.normal(size=cutoff) + 1j * rng.normal(size=cutoff)
    v[0] = rng.normal()
    u = np.fft.irfft(v, n)
    if localized:
        u = u * np.exp(-((grid.x / (0.15 * grid.half_length)) ** 2))
    return Field(grid, u / np.max(np.abs(u)))


@pytest.fixture
def pi_grid():
    return make_grid(np.pi, 64)


@pytest.fixture
def box():
    return make_grid(32.0, 512)
