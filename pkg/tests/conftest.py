import numpy as np
import pytest

from linpot import GaussianSpec, SpatialGrid, sample_gaussian


@pytest.fixture
def grid():
    return SpatialGrid(-32.0, 32.0, 2048)


@pytest.fixture
def packet(grid):
    return sample_gaussian(GaussianSpec(x0=-2.0, p0=3.0, sigma=1.0), grid)


def direct_dft(psi, hbar=1.0):
    """O(n^2) momentum representation straight from the defining sum;
    independent of the FFT path it checks.  Returns (p_sorted, amps_sorted)."""
    g = psi.grid
    k = np.sort(2.0 * np.pi * np.fft.fftfreq(g.n, d=g.dx))
    p = hbar * k
    phases = np.exp(-1j * np.outer(p, g.x) / hbar)
    amps = phases @ psi.amps * g.dx / np.sqrt(2.0 * np.pi * hbar)
    return p, amps
