"""Grids, scaling conventions, sampled states, transforms and moments.

Conventions used by every module in this package:

* Position samples sit at ``x_j = (j - N/2) dx`` for ``j = 0..N-1`` with
  ``dx = 2*half_extent/N``, so ``x = 0`` is an exact sample (N is even).
* The conjugate (wavevector) grid has spacing ``dp = 2*pi/(N*dx)`` and the
  same centered layout; its half extent is ``N*dp/2``.
* Position -> wavevector uses the kernel ``exp(-i x p)/sqrt(2*pi)``; the
  inverse uses ``exp(+i x p)/sqrt(2*pi)``.  On the grid both directions are
  carried out with centered FFTs and are exact inverses of each other.
* Dimensionless variables: ``x = x_d / d`` and ``p = p_d * d`` where
  ``d`` is the scaling length of a :class:`ScaleContext`.  All simulation
  amplitudes are dimensionless; physical lengths enter only through gate
  parameters and optical layouts.
* Tolerance ladder: 1e-12 for exact identities, 1e-9 for norm drift,
  1e-6 for transform equivalence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    DofLabelError,
    GridMismatchError,
    RepresentationError,
    SupportOverflowError,
    UnnormalizedStateError,
)

POSITION = "position"
WAVEVECTOR = "wavevector"

EXACT_TOL = 1e-12
NORM_TOL = 1e-9
TRANSFORM_TOL = 1e-6

# Canonical DOF labels of the two-photon, two-axis realization.
PHOTONIC_LABELS = ("x1", "y1", "x2", "y2")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ScaleContext:
    """Wavenumber k and scaling length d relating dimensional and
    dimensionless transverse variables (x = x_d/d, p = p_d*d).

    ``fractional_focal`` is f' = k*d**2, the focal length for which a
    2f Fourier stage is scale-matched (d = sqrt(f'/k)).
    """

    wavenumber_k: float
    scale_d: float

    def __post_init__(self):
        if not (self.wavenumber_k > 0 and math.isfinite(self.wavenumber_k)):
            raise ValueError(f"wavenumber_k must be positive, got {self.wavenumber_k}")
        if not (self.scale_d > 0 and math.isfinite(self.scale_d)):
            raise ValueError(f"scale_d must be positive, got {self.scale_d}")

    @classmethod
    def from_wavelength(cls, wavelength: float, scale_d: float) -> "ScaleContext":
        return cls(wavenumber_k=2 * math.pi / wavelength, scale_d=scale_d)

    @classmethod
    def from_fractional_focal(cls, wavenumber_k: float, f_prime: float) -> "ScaleContext":
        """Pin d = sqrt(f'/k) for a given fractional focal length f'."""
        if f_prime <= 0:
            raise ValueError(f"f_prime must be positive, got {f_prime}")
        return cls(wavenumber_k=wavenumber_k, scale_d=math.sqrt(f_prime / wavenumber_k))

    @property
    def fractional_focal(self) -> float:
        return self.wavenumber_k * self.scale_d**2

    # Conversions are single multiplications; round trips are accurate to a
    # few ulp of the float64 representation.
    def position_to_dimensionless(self, x_d):
        return np.asarray(x_d) / self.scale_d

    def position_to_dimensional(self, x):
        return np.asarray(x) * self.scale_d

    def wavevector_to_dimensionless(self, p_d):
        return np.asarray(p_d) * self.scale_d

    def wavevector_to_dimensional(self, p):
        return np.asarray(p) / self.scale_d


@dataclass(frozen=True)
class Grid1D:
    """Uniform symmetric grid for one transverse DOF (dimensionless units)."""

    num_samples: int
    half_extent: float

    def __post_init__(self):
        if self.num_samples < 8:
            raise ValueError(f"num_samples must be >= 8, got {self.num_samples}")
        if self.num_samples % 2:
            raise ValueError(f"num_samples must be even, got {self.num_samples}")
        if not (self.half_extent > 0 and math.isfinite(self.half_extent)):
            raise ValueError(f"half_extent must be positive, got {self.half_extent}")

    @property
    def spacing(self) -> float:
        return 2 * self.half_extent / self.num_samples

    @property
    def conjugate_spacing(self) -> float:
        return 2 * math.pi / (self.num_samples * self.spacing)

    @cached_property
    def positions(self) -> np.ndarray:
        n = self.num_samples
        return _readonly((np.arange(n) - n // 2) * self.spacing)

    @property
    def conjugate(self) -> "Grid1D":
        """Grid carrying the wavevector samples (spacing 2*pi/(N*dx))."""
        n = self.num_samples
        return Grid1D(n, n * self.conjugate_spacing / 2)

    @property
    def conjugate_positions(self) -> np.ndarray:
        return self.conjugate.positions

    def spacing_of(self, representation: str) -> float:
        return self.spacing if representation == POSITION else self.conjugate_spacing

    def samples_of(self, representation: str) -> np.ndarray:
        return self.positions if representation == POSITION else self.conjugate_positions


@dataclass(frozen=True)
class MomentSummary:
    """First and second moments of (x, p) with [x, p] = i."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = _readonly(np.array(self.mean, dtype=float).reshape(2))
        cov = np.array(self.covariance, dtype=float).reshape(2, 2)
        cov = _readonly((cov + cov.T) / 2)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def var_x(self) -> float:
        return float(self.covariance[0, 0])

    @property
    def var_p(self) -> float:
        return float(self.covariance[1, 1])

    @property
    def cov_xp(self) -> float:
        return float(self.covariance[0, 1])

    @property
    def heisenberg_det(self) -> float:
        """det of the covariance; >= 1/4 for physical states (up to a
        documented discretization allowance)."""
        return float(np.linalg.det(self.covariance))


@dataclass(frozen=True)
class SampledWaveFunction1D:
    """One transverse DOF sampled on a uniform grid.

    ``representation`` records whether ``amplitudes`` are position samples
    (on ``grid.positions``) or wavevector samples (on
    ``grid.conjugate_positions``).  Instances are immutable; every gate
    returns a new value.
    """

    grid: Grid1D
    amplitudes: np.ndarray
    representation: str = POSITION
    scale: ScaleContext = field(default_factory=lambda: ScaleContext(1.0, 1.0))

    def __post_init__(self):
        if self.representation not in (POSITION, WAVEVECTOR):
            raise RepresentationError(f"unknown representation {self.representation!r}")
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.num_samples,):
            raise ValueError(
                f"amplitudes shape {amps.shape} does not match grid "
                f"({self.grid.num_samples},)"
            )
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("amplitudes contain non-finite values")
        norm = math.sqrt(float(np.sum(np.abs(amps) ** 2)) * self.active_spacing)
        if abs(norm - 1.0) > NORM_TOL:
            raise UnnormalizedStateError(
                f"L2 norm {norm!r} differs from 1 by more than {NORM_TOL}"
            )
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @property
    def active_spacing(self) -> float:
        return self.grid.spacing_of(self.representation)

    @property
    def coordinates(self) -> np.ndarray:
        return self.grid.samples_of(self.representation)

    @property
    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.amplitudes) ** 2)) * self.active_spacing)


def normalized(amplitudes: np.ndarray, spacing: float) -> np.ndarray:
    """Rescale amplitudes to unit L2 norm under the given spacing."""
    nrm = math.sqrt(float(np.sum(np.abs(amplitudes) ** 2)) * spacing)
    if nrm == 0 or not math.isfinite(nrm):
        raise UnnormalizedStateError(f"cannot normalize amplitudes with norm {nrm!r}")
    return amplitudes / nrm


# ---------------------------------------------------------------------------
# centered FFT machinery (exact on the grid, Parseval-preserving)

def _centered_fft(a: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.fft.fftshift(
        np.fft.fft(np.fft.ifftshift(a, axes=axis), axis=axis), axes=axis
    )


def _centered_ifft(a: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.fft.fftshift(
        np.fft.ifft(np.fft.ifftshift(a, axes=axis), axis=axis), axes=axis
    )


def position_to_wavevector_amplitudes(w: np.ndarray, grid: Grid1D, axis: int = -1) -> np.ndarray:
    """V(p) = int exp(-i x p) W(x) dx / sqrt(2*pi), sampled on the conjugate grid."""
    return _centered_fft(w, axis) * (grid.spacing / math.sqrt(2 * math.pi))


def wavevector_to_position_amplitudes(v: np.ndarray, grid: Grid1D, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`position_to_wavevector_amplitudes` (exact on the grid)."""
    return _centered_ifft(v, axis) * (math.sqrt(2 * math.pi) / grid.spacing)


def to_conjugate_representation(psi: SampledWaveFunction1D) -> SampledWaveFunction1D:
    """Re-express the state in the conjugate basis.

    position -> wavevector uses the kernel exp(-i x p)/sqrt(2*pi); applying
    the operation twice returns the original amplitudes to roundoff, and the
    norm is identical in both representations (Parseval).
    """
    if psi.representation == POSITION:
        amps = position_to_wavevector_amplitudes(psi.amplitudes, psi.grid)
        rep = WAVEVECTOR
    else:
        amps = wavevector_to_position_amplitudes(psi.amplitudes, psi.grid)
        rep = POSITION
    return SampledWaveFunction1D(psi.grid, amps, rep, psi.scale)


def as_representation(psi: SampledWaveFunction1D, representation: str) -> SampledWaveFunction1D:
    if psi.representation == representation:
        return psi
    return to_conjugate_representation(psi)


# ---------------------------------------------------------------------------
# state constructors

def make_gaussian(
    grid: Grid1D,
    center_x: float,
    center_p: float,
    width_w: float,
    scale: ScaleContext,
) -> SampledWaveFunction1D:
    """Gaussian psi(x) ~ exp(-(x-x0)^2/(2 w^2) + i p0 x), normalized.

    Var(x) = w^2/2 and Var(p) = 1/(2 w^2) within grid tolerance.  Raises
    SupportOverflowError when the 5w footprint around center_x exceeds the
    grid.
    """
    if not (width_w > 0 and math.isfinite(width_w)):
        raise ValueError(f"width_w must be positive, got {width_w}")
    if abs(center_x) + 5 * width_w >= grid.half_extent:
        raise SupportOverflowError(
            f"gaussian footprint |{center_x}| + 5*{width_w} exceeds half_extent "
            f"{grid.half_extent}"
        )
    x = grid.positions
    amps = np.exp(-((x - center_x) ** 2) / (2 * width_w**2) + 1j * center_p * x)
    return SampledWaveFunction1D(grid, normalized(amps, grid.spacing), POSITION, scale)


def make_hermite_gauss(
    grid: Grid1D, order_n: int, scale: ScaleContext
) -> SampledWaveFunction1D:
    """n-th Hermite-Gauss mode of unit natural width (n=0 is the w=1 Gaussian).

    Uses the stable three-term recurrence on the normalized functions.  The
    mode must fit the grid: the classical turning point sqrt(2n+1) plus a
    4-unit tail margin is required to stay inside both the position extent
    and the conjugate (Nyquist) extent.
    """
    if order_n < 0 or int(order_n) != order_n:
        raise ValueError(f"order_n must be a nonnegative integer, got {order_n}")
    reach = math.sqrt(2 * order_n + 1) + 4.0
    limit = min(grid.half_extent, grid.conjugate.half_extent)
    if reach >= limit:
        raise SupportOverflowError(
            f"HG order {order_n} needs extent {reach:.2f} but the grid provides {limit:.2f}"
        )
    x = grid.positions
    phi_prev = np.zeros_like(x)
    phi = math.pi**-0.25 * np.exp(-x * x / 2)
    for m in range(1, order_n + 1):
        phi_prev, phi = phi, math.sqrt(2.0 / m) * x * phi - math.sqrt((m - 1) / m) * phi_prev
    return SampledWaveFunction1D(grid, normalized(phi.astype(complex), grid.spacing), POSITION, scale)


# ---------------------------------------------------------------------------
# observables

def overlap(psi: SampledWaveFunction1D, phi: SampledWaveFunction1D) -> complex:
    """Discrete inner product <psi|phi> = sum conj(psi_j) phi_j * spacing."""
    if psi.grid != phi.grid or psi.representation != phi.representation:
        raise GridMismatchError("overlap requires identical grids and representations")
    return complex(np.sum(np.conj(psi.amplitudes) * phi.amplitudes) * psi.active_spacing)


def position_marginal(psi: SampledWaveFunction1D) -> tuple[np.ndarray, np.ndarray]:
    w = as_representation(psi, POSITION)
    return w.coordinates, np.abs(w.amplitudes) ** 2


def wavevector_marginal(psi: SampledWaveFunction1D) -> tuple[np.ndarray, np.ndarray]:
    v = as_representation(psi, WAVEVECTOR)
    return v.coordinates, np.abs(v.amplitudes) ** 2


def moments(psi: SampledWaveFunction1D) -> MomentSummary:
    """Means and covariance of (x, p).

    The x and p marginals supply the diagonal entries; the symmetrized
    cross term Re<psi|(xp+px)/2|psi> is evaluated spectrally by applying
    p through the conjugate representation.
    """
    w = as_representation(psi, POSITION)
    x = w.grid.positions
    dx = w.grid.spacing
    rho_x = np.abs(w.amplitudes) ** 2
    mean_x = float(np.sum(x * rho_x) * dx)
    var_x = float(np.sum((x - mean_x) ** 2 * rho_x) * dx)

    v = position_to_wavevector_amplitudes(w.amplitudes, w.grid)
    p = w.grid.conjugate_positions
    dp = w.grid.conjugate_spacing
    rho_p = np.abs(v) ** 2
    mean_p = float(np.sum(p * rho_p) * dp)
    var_p = float(np.sum((p - mean_p) ** 2 * rho_p) * dp)

    p_psi = wavevector_to_position_amplitudes(p * v, w.grid)
    cross = float(np.real(np.sum(np.conj(w.amplitudes) * x * p_psi) * dx)) - mean_x * mean_p

    return MomentSummary(
        mean=np.array([mean_x, mean_p]),
        covariance=np.array([[var_x, cross], [cross, var_p]]),
    )


def parity_flip(amplitudes: np.ndarray, axis: int = -1) -> np.ndarray:
    """psi(x) -> psi(-x) on the centered grid (exact; the x=-L edge sample
    maps to itself through the periodic wrap)."""
    return np.roll(np.flip(amplitudes, axis=axis), 1, axis=axis)


def support_bounds(amplitudes: np.ndarray, coordinates: np.ndarray, rel_tol: float = 1e-6):
    """Coordinate interval outside which |amplitudes| <= rel_tol * max.

    The default 1e-6 amplitude footprint corresponds to the ~5-sigma
    density footprint of a Gaussian; gates use it for overflow checks.
    """
    mag = np.abs(amplitudes)
    mask = mag > rel_tol * mag.max()
    idx = np.nonzero(mask)[0]
    return float(coordinates[idx[0]]), float(coordinates[idx[-1]])


# ---------------------------------------------------------------------------
# two-DOF states

@dataclass(frozen=True)
class BipartiteWaveFunction:
    """Joint amplitude over two DOF (x and y of one photon, or one axis of
    two photons).  Each axis carries its own grid and representation tag."""

    grid_a: Grid1D
    grid_b: Grid1D
    amplitudes: np.ndarray
    dof_labels: tuple[str, str]
    representations: tuple[str, str] = (POSITION, POSITION)
    scale: ScaleContext = field(default_factory=lambda: ScaleContext(1.0, 1.0))

    def __post_init__(self):
        labels = tuple(self.dof_labels)
        if len(labels) != 2 or labels[0] == labels[1]:
            raise DofLabelError(f"dof_labels must be two distinct labels, got {labels}")
        reps = tuple(self.representations)
        if any(r not in (POSITION, WAVEVECTOR) for r in reps):
            raise RepresentationError(f"unknown representation in {reps}")
        amps = np.array(self.amplitudes, dtype=complex)
        expected = (self.grid_a.num_samples, self.grid_b.num_samples)
        if amps.shape != expected:
            raise ValueError(f"amplitudes shape {amps.shape} != grids {expected}")
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("amplitudes contain non-finite values")
        measure = self.grid_a.spacing_of(reps[0]) * self.grid_b.spacing_of(reps[1])
        norm = math.sqrt(float(np.sum(np.abs(amps) ** 2)) * measure)
        if abs(norm - 1.0) > NORM_TOL:
            raise UnnormalizedStateError(f"global L2 norm {norm!r} differs from 1")
        object.__setattr__(self, "dof_labels", labels)
        object.__setattr__(self, "representations", reps)
        object.__setattr__(self, "amplitudes", _readonly(amps))

    def axis_of(self, label: str) -> int:
        try:
            return self.dof_labels.index(label)
        except ValueError:
            raise DofLabelError(f"unknown DOF {label!r}; state has {self.dof_labels}") from None

    def grid_of(self, label: str) -> Grid1D:
        return (self.grid_a, self.grid_b)[self.axis_of(label)]

    def representation_of(self, label: str) -> str:
        return self.representations[self.axis_of(label)]

    def spacing_of(self, label: str) -> float:
        axis = self.axis_of(label)
        return (self.grid_a, self.grid_b)[axis].spacing_of(self.representations[axis])

    def coordinates_of(self, label: str) -> np.ndarray:
        axis = self.axis_of(label)
        return (self.grid_a, self.grid_b)[axis].samples_of(self.representations[axis])

    @property
    def measure(self) -> float:
        return self.grid_a.spacing_of(self.representations[0]) * self.grid_b.spacing_of(
            self.representations[1]
        )

    @property
    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.amplitudes) ** 2)) * self.measure)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2 * self.measure

    def marginal(self, label: str) -> tuple[np.ndarray, np.ndarray]:
        """(coordinates, probability density) of one DOF in its stored basis."""
        axis = self.axis_of(label)
        other = 1 - axis
        other_spacing = (self.grid_a, self.grid_b)[other].spacing_of(self.representations[other])
        rho = np.sum(np.abs(self.amplitudes) ** 2, axis=other) * other_spacing
        return self.coordinates_of(label), rho


def convert_axis(
    state: BipartiteWaveFunction, label: str, representation: str
) -> BipartiteWaveFunction:
    """Re-express one DOF of a joint state in the requested basis."""
    axis = state.axis_of(label)
    if state.representations[axis] == representation:
        return state
    grid = (state.grid_a, state.grid_b)[axis]
    if representation == WAVEVECTOR:
        amps = position_to_wavevector_amplitudes(state.amplitudes, grid, axis=axis)
    else:
        amps = wavevector_to_position_amplitudes(state.amplitudes, grid, axis=axis)
    reps = list(state.representations)
    reps[axis] = representation
    return BipartiteWaveFunction(
        state.grid_a, state.grid_b, amps, state.dof_labels, tuple(reps), state.scale
    )
