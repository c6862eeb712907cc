"""Exact ray-optics (ABCD) shadow of the Gaussian gate set and the compiler
lowering symplectic targets to physical optical layouts.

Matrices returned by :func:`abcd_of_gate` act on the dimensionless pair
(x, p); :func:`abcd_of_single_lens` is the dimensional Eq.-of-motion matrix
acting on (x_d, p_d).  Affine displacements (the CV Pauli gates) are kept
outside the 2x2 linear part so det stays exactly 1.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NonGaussianGateError,
    NonSymplecticError,
    RealizabilityError,
    ScaleMismatchError,
    UnsupportedGateError,
)
from .gates import (
    GateDescriptor,
    GateProgram,
    apply_gate,
    frft_plan,
    pauli_z,
    phase_poly,
)
from .gates import lens as lens_gate
from .gates import propagate as propagate_gate
from .wavefield import MomentSummary, SampledWaveFunction1D, ScaleContext

_DET_TOL = 1e-9


@dataclass(frozen=True)
class RayMatrix:
    """2x2 symplectic matrix plus affine displacement: v -> m @ v + displacement."""

    m: np.ndarray
    displacement: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        m = np.array(self.m, dtype=float).reshape(2, 2)
        d = np.array(self.displacement, dtype=float).reshape(2)
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(d))):
            raise ValueError("RayMatrix entries must be finite")
        if abs(np.linalg.det(m) - 1.0) > _DET_TOL:
            raise NonSymplecticError(f"det = {np.linalg.det(m)!r} differs from 1 beyond {_DET_TOL}")
        m.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "displacement", d)

    @classmethod
    def identity(cls) -> "RayMatrix":
        return cls(np.eye(2))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.m))

    def then(self, later: "RayMatrix") -> "RayMatrix":
        """Affine composition: apply self first, then ``later``."""
        return RayMatrix(later.m @ self.m, later.m @ self.displacement + later.displacement)


def rotation_matrix(theta: float) -> np.ndarray:
    """FRFT image: (x, p) -> (cos t x + sin t p, -sin t x + cos t p)."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def abcd_of_single_lens(z: float, f: float, k: float) -> RayMatrix:
    """Dimensional M(z, f) of the propagate-lens-propagate system:
    [[1 - z/f, (z/k)(2 - z/f)], [-k/f, 1 - z/f]]; det = 1 identically."""
    if f == 0:
        raise ValueError("focal length must be nonzero")
    if z < 0:
        raise ValueError(f"z must be >= 0, got {z}")
    a = 1 - z / f
    return RayMatrix(np.array([[a, (z / k) * (2 - z / f)], [-k / f, a]]))


def abcd_of_gate(gate: GateDescriptor, scale: ScaleContext) -> RayMatrix:
    """Dimensionless ABCD image of one Gaussian-preserving descriptor.

    PhasePoly with n >= 3 (and SLM masks) have no symplectic image and
    raise NonGaussianGateError naming the offending kind.
    """
    k = gate.kind
    fp = scale.fractional_focal
    if k == "propagate":
        return RayMatrix(np.array([[1.0, gate.z / fp], [0.0, 1.0]]))
    if k == "lens":
        beta = 0.0 if math.isinf(gate.f) else fp / gate.f
        return RayMatrix(np.array([[1.0, 0.0], [-beta, 1.0]]))
    if k == "fourier":
        return RayMatrix(rotation_matrix(math.pi / 2))
    if k == "frft":
        return RayMatrix(rotation_matrix(gate.theta))
    if k == "squeeze":
        r = gate.f2 / gate.f1
        sign = 1.0 if gate.compensate_inversion else -1.0
        return RayMatrix(np.array([[sign * r, 0.0], [0.0, sign / r]]))
    if k == "pauli_x":
        return RayMatrix(np.eye(2), np.array([gate.t, 0.0]))
    if k == "pauli_z":
        return RayMatrix(np.eye(2), np.array([0.0, gate.s]))
    if k == "phase_poly":
        if gate.n == 1:
            return RayMatrix(np.eye(2), np.array([0.0, gate.alpha]))
        if gate.n == 2:
            return RayMatrix(np.array([[1.0, 0.0], [2 * gate.alpha, 1.0]]))
        raise NonGaussianGateError(
            f"phase_poly(n={gate.n}, alpha={gate.alpha}) is not a Gaussian gate"
        )
    raise NonGaussianGateError(f"gate kind {k!r} has no ABCD image")


def abcd_of_program(program: GateProgram) -> RayMatrix:
    """Ordered product of the per-gate images (left-to-right application)."""
    total = RayMatrix.identity()
    for gate in program.gates:
        total = total.then(abcd_of_gate(gate, program.scale))
    return total


def predict_moments(rm: RayMatrix, summary: MomentSummary) -> MomentSummary:
    """mean -> m mean + displacement; covariance -> m Sigma m^T."""
    mean = rm.m @ summary.mean + rm.displacement
    cov = rm.m @ summary.covariance @ rm.m.T
    return MomentSummary(mean=mean, covariance=cov)


def dimensional_to_dimensionless(rm: RayMatrix, scale: ScaleContext) -> RayMatrix:
    """Conjugate a dimensional (x_d, p_d) matrix into dimensionless (x, p)."""
    d = scale.scale_d
    conv = np.diag([1.0 / d, d])
    inv = np.diag([d, 1.0 / d])
    return RayMatrix(conv @ rm.m @ inv, conv @ rm.displacement)


def _angle_of_rotation(m: np.ndarray) -> float:
    return math.atan2(m[0, 1], m[0, 0]) % (2 * math.pi)


_ANGLE_EPS = 1e-12


def decompose_to_gates(target: RayMatrix, scale: ScaleContext) -> GateProgram:
    """Factor a symplectic target into [FRFT, Squeeze, FRFT] (+ trailing
    Pauli displacements).

    Uses the rotation-diagonal-rotation (SVD) form of the unimodular linear
    part; the physical squeezer's built-in inversion diag(-r, -1/r) is
    absorbed by adding pi to the output rotation, keeping the emitted
    r = f2/f1 > 0.  Angles are canonicalized to [0, 2 pi), choosing the
    candidate with the smallest input-side angle.  Identity -> empty
    program; pure rotations emit a single FRFT stage.
    """
    m = target.m
    if abs(np.linalg.det(m) - 1.0) > _DET_TOL:
        raise NonSymplecticError(f"target det {np.linalg.det(m)!r} differs from 1")

    gates: list[GateDescriptor] = []
    fp = scale.fractional_focal
    if np.linalg.norm(m - np.eye(2)) < 1e-12:
        pass
    elif np.linalg.norm(m.T @ m - np.eye(2)) < 1e-10:
        gates.append(GateDescriptor.frft(_angle_of_rotation(m)))
    else:
        u, sv, vt = np.linalg.svd(m)
        if np.linalg.det(u) < 0:
            u = u @ np.diag([1.0, -1.0])
            vt = np.diag([1.0, -1.0]) @ vt
        r = float(sv[0])
        candidates = []
        for flip in (1.0, -1.0):
            theta_in = _angle_of_rotation(flip * vt)
            theta_out = (_angle_of_rotation(flip * u) + math.pi) % (2 * math.pi)
            candidates.append((theta_in, theta_out))
        theta_in, theta_out = min(candidates)
        if theta_in > _ANGLE_EPS and 2 * math.pi - theta_in > _ANGLE_EPS:
            gates.append(GateDescriptor.frft(theta_in))
        gates.append(GateDescriptor.squeeze(fp / math.sqrt(r), fp * math.sqrt(r)))
        if theta_out > _ANGLE_EPS and 2 * math.pi - theta_out > _ANGLE_EPS:
            gates.append(GateDescriptor.frft(theta_out))

    v = target.displacement
    if abs(v[0]) > 0:
        gates.append(GateDescriptor.pauli_x(float(v[0])))
    if abs(v[1]) > 0:
        gates.append(GateDescriptor.pauli_z(float(v[1])))

    program = GateProgram(tuple(gates), scale)
    residual = np.linalg.norm(abcd_of_program(program).m - m)
    if residual > _DET_TOL:
        raise NonSymplecticError(f"recomposition residual {residual} exceeds {_DET_TOL}")
    return program


# ---------------------------------------------------------------------------
# physical layouts

@dataclass(frozen=True)
class LayoutElement:
    """One physical element: kind in {lens, free_space, lps, slm}.

    ``parameter`` is the focal length [m] for lenses, the segment length [m]
    for free space, the dimensionless slope s for an LPS, and the mask id
    string for an SLM.
    """

    kind: str
    z_position: float
    parameter: float | str


@dataclass(frozen=True)
class OpticalLayout:
    """Ordered physical elements with strictly increasing z positions."""

    elements: tuple[LayoutElement, ...]
    total_length: float
    scale: ScaleContext

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        z_prev = -1.0
        for el in self.elements:
            if el.kind not in ("lens", "free_space", "lps", "slm"):
                raise ValueError(f"unknown element kind {el.kind!r}")
            if el.kind == "free_space":
                if not el.parameter >= 0:
                    raise RealizabilityError(f"negative free-space segment {el.parameter}")
                continue
            if el.kind == "lens" and (el.parameter == 0 or math.isinf(el.parameter)):
                raise RealizabilityError(f"non-finite/zero lens focal length {el.parameter}")
            if el.z_position <= z_prev:
                raise RealizabilityError(
                    f"element z positions must be strictly increasing; {el.kind} at "
                    f"{el.z_position} follows {z_prev}"
                )
            z_prev = el.z_position


def layout_stage_plan(theta: float) -> list[float]:
    """Stage angles used when lowering an FRFT to physical elements.

    Equal composite stages of at most pi/2 (so every stage has
    sin >= 1/sqrt(2)).  A stage's free leg is f' tan(theta_stage/2), which
    diverges as a stage approaches pi; the cap keeps intermediate beams
    bounded so emitted layouts stay simulatable on desk-scale grids.
    """
    action, stages = frft_plan(theta)
    if action == "identity":
        return []
    if action == "parity":
        return [math.pi / 2, math.pi / 2]
    reduced = sum(stages)
    n = max(1, math.ceil(reduced / (math.pi / 2) - 1e-12))
    return [reduced / n] * n


class _LayoutBuilder:
    def __init__(self, scale: ScaleContext):
        self.scale = scale
        self.z = 0.0
        self.elements: list[LayoutElement] = []

    def free(self, length: float):
        if length < 0:
            raise RealizabilityError(f"negative free-space segment {length}")
        if length > 0:
            self.elements.append(LayoutElement("free_space", self.z, length))
            self.z += length

    def at_plane(self, kind: str, parameter):
        self.elements.append(LayoutElement(kind, self.z, parameter))

    def frft_stage(self, theta_stage: float):
        s = math.sin(theta_stage)
        if s < 1e-6:
            raise RealizabilityError(
                f"stage angle {theta_stage} leaves sin(theta) < 1e-6; no finite lens realizes it"
            )
        f = self.scale.fractional_focal / s
        z_theta = 2 * f * math.sin(theta_stage / 2) ** 2
        self.free(z_theta)
        self.at_plane("lens", f)
        self.free(z_theta)

    def fourier_stage(self):
        self.frft_stage(math.pi / 2)

    def done(self) -> OpticalLayout:
        return OpticalLayout(tuple(self.elements), self.z, self.scale)


def layout_of(program: GateProgram, scale: ScaleContext | None = None) -> OpticalLayout:
    """Lower a gate program to lenses, free space, LPS plates and SLM masks.

    FRFT(theta) becomes [free z_theta, lens f' / sin(theta_stage), free
    z_theta] per stage with z_theta = 2 f sin^2(theta/2); Squeeze becomes
    the confocal pair; PauliZ an LPS at the current plane; PauliX the
    Fourier-LPS-Fourier^3 sandwich; PhasePoly an SLM mask.
    """
    scale = program.scale if scale is None else scale
    b = _LayoutBuilder(scale)
    for i, gate in enumerate(program.gates):
        k = gate.kind
        try:
            if k == "propagate":
                b.free(gate.z)
            elif k == "lens":
                if math.isinf(gate.f):
                    continue
                b.at_plane("lens", gate.f)
            elif k == "fourier":
                _check_layout_focal(gate.f, scale)
                b.fourier_stage()
            elif k == "frft":
                stages = layout_stage_plan(gate.theta)
                if not stages:
                    continue
                if gate.f is not None:
                    # descriptor f is checked against the gate-level stage
                    # angle; the layout may split finer for containment
                    _, gate_stages = frft_plan(gate.theta)
                    _check_layout_focal(gate.f * math.sin(gate_stages[0]), scale)
                for stage in stages:
                    b.frft_stage(stage)
            elif k == "squeeze":
                b.free(gate.f1)
                b.at_plane("lens", gate.f1)
                b.free(gate.f1 + gate.f2)
                b.at_plane("lens", gate.f2)
                b.free(gate.f2)
            elif k == "pauli_z":
                b.at_plane("lps", float(gate.s))
            elif k == "pauli_x":
                b.fourier_stage()
                b.at_plane("lps", float(-gate.t))
                for _ in range(3):
                    b.fourier_stage()
            elif k == "phase_poly":
                b.at_plane("slm", f"poly:n={gate.n},alpha={gate.alpha!r}")
            elif k == "slm_mask":
                b.at_plane("slm", gate.mask_id)
            else:
                raise RealizabilityError(f"no physical lowering for kind {k!r}")
        except (RealizabilityError, ScaleMismatchError) as err:
            err.args = (f"step {i} ({k}): {err}",)
            raise
    return b.done()


def _check_layout_focal(f_prime_requested: float | None, scale: ScaleContext):
    if f_prime_requested is None:
        return
    target = scale.fractional_focal
    if abs(f_prime_requested - target) > 1e-9 * max(abs(target), 1.0):
        raise ScaleMismatchError(
            f"descriptor implies f' = {f_prime_requested} but the program pins {target}"
        )


_POLY_MASK = re.compile(r"^poly:n=(\d+),alpha=(.+)$")


def simulate_layout(
    layout: OpticalLayout, psi: SampledWaveFunction1D, scale: ScaleContext | None = None
) -> SampledWaveFunction1D:
    """Run a state through the physical element list (free space, lenses,
    LPS plates, generated SLM masks)."""
    scale = layout.scale if scale is None else scale
    state = psi
    for el in layout.elements:
        if el.kind == "free_space":
            state = propagate_gate(state, el.parameter, scale)
        elif el.kind == "lens":
            state = lens_gate(state, el.parameter, scale)
        elif el.kind == "lps":
            state = pauli_z(state, el.parameter)
        elif el.kind == "slm":
            match = _POLY_MASK.match(str(el.parameter))
            if not match:
                raise UnsupportedGateError(f"cannot simulate foreign SLM mask {el.parameter!r}")
            state = phase_poly(state, int(match.group(1)), float(match.group(2)))
    return state


# ---------------------------------------------------------------------------
# serialization: line-oriented table, bit-exact via repr round-trip floats

_LAYOUT_HEADER = "# element\tz_position_m\tparameter"


def layout_to_table(layout: OpticalLayout) -> str:
    """Serialize to the documented text table.

    One line per element: ``kind<TAB>z_position<TAB>parameter`` with floats
    written as shortest round-trip ``repr``;  a final comment line carries
    the total length.  Exact round trip via :func:`layout_from_table`.
    """
    lines = [_LAYOUT_HEADER]
    for el in layout.elements:
        param = el.parameter if isinstance(el.parameter, str) else repr(float(el.parameter))
        lines.append(f"{el.kind}\t{el.z_position!r}\t{param}")
    lines.append(f"# total_length_m\t{layout.total_length!r}")
    return "\n".join(lines) + "\n"


def layout_from_table(text: str, scale: ScaleContext) -> OpticalLayout:
    elements = []
    total = 0.0
    for line in text.strip().splitlines():
        if line.startswith("# total_length_m"):
            total = float(line.split("\t")[1])
            continue
        if line.startswith("#"):
            continue
        kind, z, param = line.split("\t")
        parameter = param if kind == "slm" else float(param)
        elements.append(LayoutElement(kind, float(z), parameter))
    return OpticalLayout(tuple(elements), total, scale)
