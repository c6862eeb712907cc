"""Slow dense-kernel reference transforms used as ground truth.

These implementations are deliberately direct O(N^2) quadratures of the
continuum kernels and share no code with the fast paths in
:mod:`cvphoton.gates`.  Trapezoidal weights suffice because the test states
are smooth, band-limited and contained well inside the grid; with those
states the discretized kernels are unitary to roundoff on the band-limited
subspace (as matrices over all of C^N they are not, since vectors with
content at the grid edge alias).

Validity of the Fresnel quadrature: the sampled chirp's alias walk-off
2*pi*chi/dx (chi = z/(k d^2)) must clear the state's support, and the chirp
must be Nyquist-sampled over the support, i.e. roughly
    support_width * dx / pi  <~  chi
on the dimensionless grid.  Below that the dense sum degrades regardless of
how small the true propagation effect is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RepresentationError
from .wavefield import (
    POSITION,
    Grid1D,
    SampledWaveFunction1D,
    ScaleContext,
    as_representation,
    normalized,
)


def _trapezoid_weights(n: int, spacing: float) -> np.ndarray:
    w = np.full(n, spacing)
    w[0] = w[-1] = spacing / 2
    return w


@dataclass(frozen=True)
class DenseKernel:
    """Dense N x N transform matrix with quadrature weights folded in."""

    matrix: np.ndarray
    source: str

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        return self.matrix @ amplitudes

    def apply_adjoint(self, amplitudes: np.ndarray) -> np.ndarray:
        # adjoint wrt the grid inner product <a|b> = sum conj(a) b dx; the
        # quadrature weights are already inside ``matrix`` so the plain
        # conjugate transpose is the operator adjoint up to endpoint weights.
        return self.matrix.conj().T @ amplitudes


def frft_kernel(grid: Grid1D, theta: float) -> DenseKernel:
    """Dense FRFT kernel F_theta(x, x') on the grid, |sin theta| >= 1e-6.

    A_theta exp(i cot(theta)(x^2+x'^2)/2) exp(-i x x'/sin(theta)) with
    A_theta = exp(i(theta/2 - pi/4))/sqrt(2 pi sin theta), trapezoid
    weights in x'.
    """
    s = math.sin(theta)
    if abs(s) < 1e-6:
        raise ValueError(f"theta = {theta} is within 1e-6 of a multiple of pi (singular kernel)")
    x = grid.positions
    cot = math.cos(theta) / s
    a_theta = np.exp(1j * (theta / 2 - math.pi / 4)) / np.sqrt(2 * math.pi * complex(s))
    phase = 0.5 * cot * (x[:, None] ** 2 + x[None, :] ** 2) - np.outer(x, x) / s
    matrix = a_theta * np.exp(1j * phase) * _trapezoid_weights(grid.num_samples, grid.spacing)
    return DenseKernel(matrix=matrix, source=f"frft({theta})")


def fresnel_kernel(grid: Grid1D, z: float, scale: ScaleContext) -> DenseKernel:
    """Dense Fresnel propagator sqrt(k/(2 pi i z)) exp(i k (x_d-x_d')^2 / 2z)."""
    if z <= 0:
        raise ValueError(f"propagation distance must be > 0, got {z}")
    x_d = grid.positions * scale.scale_d
    k = scale.wavenumber_k
    pref = math.sqrt(k / (2 * math.pi * z)) * np.exp(-0.25j * math.pi)
    diff = x_d[:, None] - x_d[None, :]
    matrix = pref * np.exp(0.5j * k * diff * diff / z)
    matrix = matrix * (_trapezoid_weights(grid.num_samples, grid.spacing) * scale.scale_d)
    return DenseKernel(matrix=matrix, source=f"fresnel(z={z})")


def frft_dense(psi: SampledWaveFunction1D, theta: float) -> SampledWaveFunction1D:
    """O(N^2) quadrature of the FRFT kernel; output renormalized."""
    w = as_representation(psi, POSITION)
    out = frft_kernel(w.grid, theta).apply(w.amplitudes)
    return SampledWaveFunction1D(w.grid, normalized(out, w.grid.spacing), POSITION, w.scale)


def fresnel_dense(
    psi: SampledWaveFunction1D, z: float, scale: ScaleContext | None = None
) -> SampledWaveFunction1D:
    """Direct convolution with the Fresnel propagator over distance z > 0."""
    if psi.representation != POSITION:
        psi = as_representation(psi, POSITION)
    scale = psi.scale if scale is None else scale
    out = fresnel_kernel(psi.grid, z, scale).apply(psi.amplitudes)
    return SampledWaveFunction1D(psi.grid, normalized(out, psi.grid.spacing), POSITION, psi.scale)
