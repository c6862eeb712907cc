import math

import numpy as np
import pytest

from cvphoton.wavefield import (
    Grid1D,
    SampledWaveFunction1D,
    ScaleContext,
    make_hermite_gauss,
    normalized,
)


@pytest.fixture
def scale():
    return ScaleContext(1.0, 1.0)


@pytest.fixture
def grid():
    return Grid1D(512, 12.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def l2_diff(a, b) -> float:
    """L2 distance between two states on the same grid/representation."""
    return math.sqrt(float(np.sum(np.abs(a.amplitudes - b.amplitudes) ** 2)) * a.active_spacing)


def l2_diff_mod_phase(a, b) -> float:
    """L2 distance after removing the best global phase."""
    ov = np.sum(np.conj(a.amplitudes) * b.amplitudes)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return math.sqrt(
        float(np.sum(np.abs(a.amplitudes * phase - b.amplitudes) ** 2)) * a.active_spacing
    )


def hg_superposition(grid, scale, rng, max_order=10):
    w = rng.normal(size=max_order + 1) + 1j * rng.normal(size=max_order + 1)
    amps = sum(c * make_hermite_gauss(grid, n, scale).amplitudes for n, c in enumerate(w))
    return SampledWaveFunction1D(grid, normalized(amps, grid.spacing), "position", scale)


def dense_fourier_matrix(grid, sign=-1.0):
    """O(N^2) quadrature of the continuum transform kernel
    exp(sign * i x p)/sqrt(2 pi): the independent oracle for the FFT paths."""
    x = grid.positions
    p = grid.conjugate_positions
    return np.exp(sign * 1j * np.outer(p, x)) * grid.spacing / math.sqrt(2 * math.pi)
