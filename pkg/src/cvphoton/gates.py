"""Single-photon gates as phase multiplications and fast scaled transforms.

Every gate acts on a :class:`~cvphoton.wavefield.SampledWaveFunction1D`
and returns a new state in the caller's original representation.  Phase
convention for rotations: F_theta = exp(i theta/2) exp(-i theta (x^2+p^2)/2),
i.e. the kernel prefactor is A_theta = exp(i(theta/2 - pi/4))/sqrt(2 pi
sin(theta)) (the principal branch of sqrt((1 - i cot theta)/2 pi)).  With
this choice F_theta is an exact one-parameter group: Hermite-Gauss modes
acquire eigenphase exp(-i n theta), four quarter turns are the identity and
two are the parity, and theta = pi/2 reproduces the Fourier gate that maps
the angular spectrum onto the output position wavefunction.

The fast FRFT path factors the kernel into chirp - scaled Fourier - chirp
and evaluates the scaled Fourier sum exactly with a Bluestein chirp
convolution (zero-padded FFTs), so it computes the same discrete sum as the
dense-kernel oracle to roundoff.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import next_fast_len
from scipy.signal import fftconvolve

from .errors import (
    NormalizationWarning,
    NyquistViolationError,
    NyquistWarning,
    RepresentationError,
    ScaleMismatchError,
    SupportOverflowError,
    UnsupportedGateError,
)
from .wavefield import (
    NORM_TOL,
    POSITION,
    WAVEVECTOR,
    Grid1D,
    MomentSummary,
    SampledWaveFunction1D,
    ScaleContext,
    as_representation,
    moments,
    parity_flip,
    support_bounds,
)

# Angles closer than this (in |sin theta|) to a multiple of pi dispatch to
# the exact identity/parity instead of evaluating 1/sin(theta).
SIN_DISPATCH_TOL = 1e-6

_SCALE_RTOL = 1e-9


# ---------------------------------------------------------------------------
# descriptors

_GATE_KINDS = (
    "propagate",
    "lens",
    "fourier",
    "frft",
    "squeeze",
    "pauli_x",
    "pauli_z",
    "phase_poly",
    "slm_mask",
)


@dataclass(frozen=True)
class GateDescriptor:
    """One abstract gate with its parameters.

    Lengths (z, f, f1, f2) are physical; theta is in radians; t, s, alpha
    are dimensionless.  Use the classmethod constructors; ``__post_init__``
    validates the parameter set for the kind.
    """

    kind: str
    z: float | None = None
    f: float | None = None
    f1: float | None = None
    f2: float | None = None
    theta: float | None = None
    t: float | None = None
    s: float | None = None
    n: int | None = None
    alpha: float | None = None
    mask_id: str | None = None
    mode: str = "ideal"
    compensate_inversion: bool = False
    method: str = "direct"

    def __post_init__(self):
        k = self.kind
        if k not in _GATE_KINDS:
            raise ValueError(f"unknown gate kind {k!r}")
        if k == "propagate" and not (self.z is not None and self.z >= 0):
            raise ValueError(f"propagate requires z >= 0, got {self.z}")
        if k == "lens" and (self.f is None or self.f == 0):
            raise ValueError("lens requires a nonzero focal length")
        if k == "frft":
            if self.theta is None:
                raise ValueError("frft requires theta")
            if self.f is not None and self.f <= 0:
                raise ValueError(f"frft focal length must be positive, got {self.f}")
        if k == "squeeze" and not (self.f1 and self.f2 and self.f1 > 0 and self.f2 > 0):
            raise ValueError("squeeze requires f1 > 0 and f2 > 0")
        if k == "pauli_x" and self.t is None:
            raise ValueError("pauli_x requires t")
        if k == "pauli_z" and self.s is None:
            raise ValueError("pauli_z requires s")
        if k == "phase_poly" and not (
            self.n is not None and self.n >= 1 and int(self.n) == self.n and self.alpha is not None
        ):
            raise ValueError("phase_poly requires integer n >= 1 and alpha")
        if k == "slm_mask" and not self.mask_id:
            raise ValueError("slm_mask requires mask_id")

    @classmethod
    def propagate(cls, z: float) -> "GateDescriptor":
        return cls("propagate", z=z)

    @classmethod
    def lens(cls, f: float) -> "GateDescriptor":
        return cls("lens", f=f)

    @classmethod
    def fourier(cls, f: float | None = None) -> "GateDescriptor":
        return cls("fourier", f=f)

    @classmethod
    def frft(cls, theta: float, f: float | None = None) -> "GateDescriptor":
        return cls("frft", theta=theta, f=f)

    @classmethod
    def squeeze(
        cls, f1: float, f2: float, mode: str = "ideal", compensate_inversion: bool = False
    ) -> "GateDescriptor":
        return cls("squeeze", f1=f1, f2=f2, mode=mode, compensate_inversion=compensate_inversion)

    @classmethod
    def pauli_x(cls, t: float, method: str = "direct") -> "GateDescriptor":
        return cls("pauli_x", t=t, method=method)

    @classmethod
    def pauli_z(cls, s: float) -> "GateDescriptor":
        return cls("pauli_z", s=s)

    @classmethod
    def phase_poly(cls, n: int, alpha: float) -> "GateDescriptor":
        return cls("phase_poly", n=n, alpha=alpha)

    @classmethod
    def slm_mask(cls, mask_id: str) -> "GateDescriptor":
        return cls("slm_mask", mask_id=mask_id)


@dataclass(frozen=True)
class GateProgram:
    """Ordered gate sequence sharing one ScaleContext (d pinned once)."""

    gates: tuple[GateDescriptor, ...]
    scale: ScaleContext

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    def __len__(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class StepTrace:
    index: int
    kind: str
    norm: float
    moments: MomentSummary


# ---------------------------------------------------------------------------
# internal helpers

def _finalize(psi: SampledWaveFunction1D, amps: np.ndarray, representation: str, context: str):
    spacing = psi.grid.spacing_of(representation)
    norm = math.sqrt(float(np.sum(np.abs(amps) ** 2)) * spacing)
    if abs(norm - 1.0) > NORM_TOL:
        warnings.warn(
            f"{context}: norm drifted to {norm!r}; output renormalized",
            NormalizationWarning,
            stacklevel=3,
        )
    return SampledWaveFunction1D(psi.grid, amps / norm, representation, psi.scale)


def _resolve_scale(psi: SampledWaveFunction1D, scale: ScaleContext | None) -> ScaleContext:
    return psi.scale if scale is None else scale


def _scaled_quadratic_sum(values: np.ndarray, c: float, axis: int = -1) -> np.ndarray:
    """S[m] = sum_j values[j] exp(-i c u_j u_m) with u = index - N/2.

    Bluestein identity: u_j u_m = (u_j^2 + u_m^2 - (j-m)^2)/2 turns the sum
    into a linear convolution against exp(+i c n^2 / 2), done with
    zero-padded FFTs.  Exact up to roundoff for any real c.
    """
    values = np.moveaxis(values, axis, 0)
    n = values.shape[0]
    u = np.arange(n) - n // 2
    half = np.exp(-0.5j * c * u * u)
    shape = (n,) + (1,) * (values.ndim - 1)
    b = values * half.reshape(shape)
    idx = np.arange(-(n - 1), n)
    kern = np.exp(0.5j * c * idx * idx).reshape((2 * n - 1,) + (1,) * (values.ndim - 1))
    conv = fftconvolve(b, kern, mode="full", axes=0)[n - 1 : 2 * n - 1]
    out = half.reshape(shape) * conv
    return np.moveaxis(out, 0, axis)


def _frft_prefactor(theta: float) -> complex:
    return np.exp(1j * (theta / 2 - math.pi / 4)) / math.sqrt(2 * math.pi * math.sin(theta))


def _input_chirp(theta: float, x: np.ndarray) -> np.ndarray:
    """Quadratic phase exp(i cot(theta) x^2 / 2) multiplying input and output."""
    return np.exp(0.5j * (math.cos(theta) / math.sin(theta)) * x * x)


def _frft_stage_amplitudes(amps: np.ndarray, grid: Grid1D, theta: float, axis: int = -1):
    """Single FRFT stage with theta strictly inside (0, pi), position rep."""
    x = grid.positions
    shape = [1] * amps.ndim
    shape[axis] = grid.num_samples
    chirp = _input_chirp(theta, x).reshape(shape)
    c = grid.spacing**2 / math.sin(theta)
    core = _scaled_quadratic_sum(amps * chirp, c, axis=axis)
    return _frft_prefactor(theta) * grid.spacing * chirp * core


def frft_plan(theta: float) -> tuple[str, list[float]]:
    """Reduce theta mod 2*pi into ('identity'|'parity'|'stages', stage list).

    Angles within |sin| < 1e-6 of a multiple of pi dispatch to the exact
    identity/parity; reduced angles inside (0, pi) run as one stage (the
    same discrete sum the dense oracle kernel evaluates), and angles above
    pi as two equal composite stages sharing one f'.  Physical layouts use
    a finer stage split (see symplectic.layout_stage_plan); the numerical
    gate is stage-split-invariant to roundoff.
    """
    reduced = math.fmod(theta, 2 * math.pi)
    if reduced < 0:
        reduced += 2 * math.pi
    if abs(math.sin(reduced)) < SIN_DISPATCH_TOL:
        if min(reduced, 2 * math.pi - reduced) < math.pi / 2:
            return "identity", []
        return "parity", []
    if reduced < math.pi:
        return "stages", [reduced]
    return "stages", [reduced / 2, reduced / 2]


def frft_amplitudes(amps: np.ndarray, grid: Grid1D, theta: float, axis: int = -1) -> np.ndarray:
    """Dimensionless F_theta on raw position-representation amplitudes."""
    action, stages = frft_plan(theta)
    if action == "identity":
        return np.array(amps, dtype=complex)
    if action == "parity":
        return parity_flip(amps, axis=axis)
    out = np.array(amps, dtype=complex)
    for stage in stages:
        out = _frft_stage_amplitudes(out, grid, stage, axis=axis)
    return out


def frft_focal_length(theta: float, scale: ScaleContext) -> float:
    """Physical focal length f = d^2 k / sin(theta_stage) realizing one stage."""
    _, stages = frft_plan(theta)
    if not stages:
        raise ValueError(f"theta {theta} is an exact identity/parity; no lens stage")
    return scale.fractional_focal / math.sin(stages[0])


def _check_frft_scale(theta: float, f: float | None, scale: ScaleContext):
    if f is None:
        return
    _, stages = frft_plan(theta)
    if not stages:
        return
    implied = f * math.sin(stages[0])
    target = scale.fractional_focal
    if abs(implied - target) > _SCALE_RTOL * max(abs(target), 1.0):
        raise ScaleMismatchError(
            f"stage needs d = sqrt(f sin(theta)/k) = sqrt({implied}/k) but the "
            f"pinned scale gives d^2 k = {target}"
        )


# ---------------------------------------------------------------------------
# gates

def propagate(
    psi: SampledWaveFunction1D, z: float, scale: ScaleContext | None = None
) -> SampledWaveFunction1D:
    """Free-space propagation over physical distance z >= 0.

    Multiplies exp(-i z p_d^2 / 2k) in the wavevector representation
    (angular-spectrum method); returned in the caller's representation.
    """
    if z < 0:
        raise ValueError(f"propagation distance must be >= 0, got {z}")
    scale = _resolve_scale(psi, scale)
    chi = z / scale.fractional_focal
    v = as_representation(psi, WAVEVECTOR)
    p = v.coordinates
    out = _finalize(v, v.amplitudes * np.exp(-0.5j * chi * p * p), WAVEVECTOR, "propagate")
    return as_representation(out, psi.representation)


def lens(
    psi: SampledWaveFunction1D, f: float, scale: ScaleContext | None = None
) -> SampledWaveFunction1D:
    """Thin lens of focal length f (negative f = divergent; f=inf allowed).

    Multiplies exp(-i k x_d^2 / 2f) in the position representation; the
    position marginal is unchanged.
    """
    if f == 0:
        raise ValueError("focal length must be nonzero")
    scale = _resolve_scale(psi, scale)
    beta = 0.0 if math.isinf(f) else scale.fractional_focal / f
    w = as_representation(psi, POSITION)
    x = w.coordinates
    out = _finalize(w, w.amplitudes * np.exp(-0.5j * beta * x * x), POSITION, "lens")
    return as_representation(out, psi.representation)


def single_lens_system(
    psi: SampledWaveFunction1D, z: float, f: float, scale: ScaleContext | None = None
) -> SampledWaveFunction1D:
    """Propagate z, lens f, propagate z (the workhorse layout of the gate set)."""
    scale = _resolve_scale(psi, scale)
    return propagate(lens(propagate(psi, z, scale), f, scale), z, scale)


def fourier(
    psi: SampledWaveFunction1D, f: float | None = None, scale: ScaleContext | None = None
) -> SampledWaveFunction1D:
    """Fourier gate: output position wavefunction = input angular spectrum.

    Physically the z=f single-lens system with d = sqrt(f/k); raises
    ScaleMismatchError when the caller pins an inconsistent f.  Numerically
    identical to frft at theta = pi/2.
    """
    scale = _resolve_scale(psi, scale)
    if f is not None:
        target = scale.fractional_focal
        if abs(f - target) > _SCALE_RTOL * max(abs(target), 1.0):
            raise ScaleMismatchError(
                f"fourier needs d = sqrt(f/k); pinned scale has d^2 k = {target}, got f = {f}"
            )
    return frft(psi, math.pi / 2, f=None, scale=scale)


def frft(
    psi: SampledWaveFunction1D,
    theta: float,
    f: float | None = None,
    scale: ScaleContext | None = None,
) -> SampledWaveFunction1D:
    """Fractional Fourier gate: phase-space rotation by theta.

    Reduced angles outside (0, pi) auto-decompose into equal stages inside
    (0, pi) sharing one fractional focal length f' = f sin(theta_stage) =
    d^2 k; exact multiples of pi dispatch to identity/parity.  When f is
    given it is checked against the pinned scale.
    """
    scale = _resolve_scale(psi, scale)
    _check_frft_scale(theta, f, scale)
    w = as_representation(psi, POSITION)
    amps = frft_amplitudes(w.amplitudes, w.grid, theta)
    out = _finalize(w, amps, POSITION, f"frft(theta={theta})")
    return as_representation(out, psi.representation)


def _resample_scaled(
    psi_pos: SampledWaveFunction1D, magnification: float, flip: bool
) -> np.ndarray:
    """Amplitudes of psi evaluated at (+-x/magnification) by trigonometric
    interpolation (Bluestein-scaled inverse transform from the conjugate
    samples)."""
    grid = psi_pos.grid
    v = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(psi_pos.amplitudes)))
    v *= grid.spacing / math.sqrt(2 * math.pi)
    sign = -1.0 if flip else 1.0
    # psi(y_m) = sum_p V_p exp(i y_m p) dp/sqrt(2 pi), y_m = sign*x_m/r:
    # exponent i*sign*u_m*u_p*dx*dp/r, an exact scaled quadratic sum.
    c = -sign * grid.spacing * grid.conjugate_spacing / magnification
    s = _scaled_quadratic_sum(v, c)
    return s * grid.conjugate_spacing / math.sqrt(2 * math.pi)


def squeeze(
    psi: SampledWaveFunction1D,
    f1: float,
    f2: float,
    scale: ScaleContext | None = None,
    mode: str = "ideal",
    compensate_inversion: bool = False,
) -> SampledWaveFunction1D:
    """Confocal squeezer with r = f2/f1: x -> -r x, p -> -p/r.

    The wavefunction maps to psi(-x/r)/sqrt(r) (inverted image of
    magnification r).  ``mode="physical"`` simulates the two consecutive
    z=f Fourier stages of the confocal pair; the two stages carry a constant
    Gouy phase exp(-i pi/2) which is removed so both modes satisfy the same
    contract.  ``compensate_inversion`` applies the F^2 parity afterwards.
    """
    if not (f1 > 0 and f2 > 0):
        raise ValueError(f"squeeze requires f1, f2 > 0, got {f1}, {f2}")
    if mode not in ("ideal", "physical"):
        raise ValueError(f"unknown squeeze mode {mode!r}")
    scale = _resolve_scale(psi, scale)
    r = f2 / f1
    w = as_representation(psi, POSITION)

    lo, hi = support_bounds(w.amplitudes, w.coordinates)
    reach = r * max(abs(lo), abs(hi))
    if reach >= w.grid.half_extent:
        raise SupportOverflowError(
            f"magnified support {reach:.2f} exceeds half_extent {w.grid.half_extent}"
        )

    if mode == "ideal":
        amps = _resample_scaled(w, r, flip=not compensate_inversion) / math.sqrt(r)
        out = _finalize(w, amps, POSITION, "squeeze")
    else:
        stage = single_lens_system(w, f1, f1, scale)
        stage = single_lens_system(stage, f2, f2, scale)
        amps = stage.amplitudes * 1j  # remove the two-stage Gouy phase e^{-i pi/2}
        if compensate_inversion:
            amps = parity_flip(amps)
        out = _finalize(w, amps, POSITION, "squeeze")
    return as_representation(out, psi.representation)


def pauli_z(psi: SampledWaveFunction1D, s: float) -> SampledWaveFunction1D:
    """Momentum displacement Z(s) = exp(i s x): multiplies exp(i s x) in the
    position representation; position marginal unchanged."""
    w = as_representation(psi, POSITION)
    nyquist = math.pi / w.grid.spacing
    if abs(s) >= nyquist:
        raise NyquistViolationError(
            f"|s| = {abs(s)} exceeds the conjugate Nyquist bound {nyquist:.3f}"
        )
    out = _finalize(w, w.amplitudes * np.exp(1j * s * w.coordinates), POSITION, "pauli_z")
    return as_representation(out, psi.representation)


def pauli_x(
    psi: SampledWaveFunction1D, t: float, method: str = "direct"
) -> SampledWaveFunction1D:
    """Position displacement X(t): W_out(x) = W_in(x - t).

    ``direct`` applies the shift theorem (band-limited: multiply exp(-i t p)
    in the conjugate representation).  ``composed`` runs the optical
    sequence F^dagger Z(-t) F with F^dagger realized as three Fourier gates;
    the two methods agree to well under 1e-8.
    """
    if method not in ("direct", "composed"):
        raise ValueError(f"unknown pauli_x method {method!r}")
    w = as_representation(psi, POSITION)
    lo, hi = support_bounds(w.amplitudes, w.coordinates)
    if max(abs(lo + t), abs(hi + t)) >= w.grid.half_extent:
        raise SupportOverflowError(
            f"shifted support [{lo + t:.2f}, {hi + t:.2f}] exceeds half_extent "
            f"{w.grid.half_extent}"
        )
    if method == "direct":
        v = as_representation(w, WAVEVECTOR)
        shifted = v.amplitudes * np.exp(-1j * t * v.coordinates)
        out = _finalize(v, shifted, WAVEVECTOR, "pauli_x")
        out = as_representation(out, POSITION)
    else:
        out = frft(w, math.pi / 2)
        out = pauli_z(out, -t)
        for _ in range(3):
            out = frft(out, math.pi / 2)
    return as_representation(out, psi.representation)


def phase_poly(psi: SampledWaveFunction1D, n: int, alpha: float) -> SampledWaveFunction1D:
    """Polynomial phase gate B(n, alpha) = exp(i alpha x^n) (SLM mask).

    n=1 reproduces pauli_z(alpha); n=2 is the dimensionless lens phase;
    n=3 is the non-Gaussian cubic gate.  Warns (does not fail) when the
    local phase gradient max|n alpha x^(n-1)| exceeds the Nyquist bound.
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"phase order n must be an integer >= 1, got {n}")
    w = as_representation(psi, POSITION)
    x = w.coordinates
    gradient = np.max(np.abs(n * alpha * x ** (n - 1)))
    nyquist = math.pi / w.grid.spacing
    if gradient >= nyquist:
        warnings.warn(
            f"phase_poly(n={n}, alpha={alpha}): peak phase gradient {gradient:.3g} "
            f"exceeds Nyquist {nyquist:.3g}; expect aliasing",
            NyquistWarning,
            stacklevel=2,
        )
    out = _finalize(w, w.amplitudes * np.exp(1j * alpha * x**n), POSITION, "phase_poly")
    return as_representation(out, psi.representation)


def apply_gate(
    psi: SampledWaveFunction1D, gate: GateDescriptor, scale: ScaleContext | None = None
) -> SampledWaveFunction1D:
    scale = _resolve_scale(psi, scale)
    k = gate.kind
    if k == "propagate":
        return propagate(psi, gate.z, scale)
    if k == "lens":
        return lens(psi, gate.f, scale)
    if k == "fourier":
        return fourier(psi, gate.f, scale)
    if k == "frft":
        return frft(psi, gate.theta, gate.f, scale)
    if k == "squeeze":
        return squeeze(psi, gate.f1, gate.f2, scale, gate.mode, gate.compensate_inversion)
    if k == "pauli_x":
        return pauli_x(psi, gate.t, gate.method)
    if k == "pauli_z":
        return pauli_z(psi, gate.s)
    if k == "phase_poly":
        return phase_poly(psi, gate.n, gate.alpha)
    raise UnsupportedGateError(
        f"gate kind {k!r} is a layout-only reference and cannot be executed"
    )


def apply_program(psi: SampledWaveFunction1D, program: GateProgram, trace: bool = False):
    """Apply the program left to right.

    With ``trace=True`` returns ``(state, [StepTrace, ...])`` recording the
    norm and moments after each step.  Constituent errors are re-raised
    annotated with the failing step index.  An empty program is the
    canonical no-op.
    """
    if abs(program.scale.wavenumber_k - psi.scale.wavenumber_k) > _SCALE_RTOL * psi.scale.wavenumber_k or abs(
        program.scale.scale_d - psi.scale.scale_d
    ) > _SCALE_RTOL * psi.scale.scale_d:
        raise ScaleMismatchError("program and state carry different ScaleContexts")
    state = psi
    steps: list[StepTrace] = []
    for i, gate in enumerate(program.gates):
        try:
            state = apply_gate(state, gate, program.scale)
        except Exception as err:
            err.args = (f"step {i} ({gate.kind}): {err}",)
            raise
        if trace:
            steps.append(StepTrace(i, gate.kind, state.norm, moments(state)))
    if trace:
        return state, steps
    return state
