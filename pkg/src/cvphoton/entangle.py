"""Two-DOF and two-photon states: CZ links, regularized EPR/SPDC sources,
cluster assembly, nullifier diagnostics and projective measurement.

Sign conventions produced by this package (recorded, since the source
material is ambiguous by one sign): the four-wave-mixing EPR state is
momentum-anticorrelated about Q (signal at Q-q, idler at q), and the
two-node cluster obtained from the plane-wave SPDC state by a one-sided
Fourier gate carries the kernel exp(-i x1 x2), i.e. an effective CZ edge of
weight -1.

States with three or four DOF are held as at most two joint (bipartite)
amplitudes plus symbolically tracked cross-component CZ phase links
exp(i g x_i x_j).  Links never change position densities, so marginals and
position measurements are exact; momentum-bearing observables transform the
operators (p_i -> p_i + g x_j) instead of materializing a 4-D array.  A
dense 4-D construction at small N is used in the test suite as an
independent oracle for this bookkeeping.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DofLabelError,
    NyquistWarning,
    PumpError,
    RepresentationError,
    SupportOverflowError,
    TopologyError,
    ZeroProbabilityError,
)
from .gates import frft_amplitudes, frft_plan
from .gates import frft as frft_gate
from .wavefield import (
    PHOTONIC_LABELS,
    POSITION,
    WAVEVECTOR,
    BipartiteWaveFunction,
    Grid1D,
    SampledWaveFunction1D,
    ScaleContext,
    convert_axis,
    make_gaussian,
    normalized,
    parity_flip,
)

_DENSITY_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# specifications

@dataclass(frozen=True)
class PumpProfile:
    """Angular spectrum v of the pump beam feeding an SPDC source."""

    kind: str
    width: float | None = None
    coordinates: np.ndarray | None = None
    amplitudes: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("plane_wave", "gaussian", "sampled"):
            raise ValueError(f"unknown pump kind {self.kind!r}")
        if self.kind in ("plane_wave", "gaussian"):
            if not (self.width and self.width > 0):
                raise ValueError(f"pump kind {self.kind!r} requires a positive width")
        else:
            c = np.asarray(self.coordinates, dtype=float)
            a = np.asarray(self.amplitudes, dtype=complex)
            if c.ndim != 1 or a.shape != c.shape or len(c) < 2:
                raise ValueError("sampled pump requires matching 1-D coordinate/amplitude arrays")
            if np.any(np.diff(c) <= 0):
                raise ValueError("sampled pump coordinates must be strictly increasing")
            norm = math.sqrt(float(np.sum(np.abs(a) ** 2)) * float(c[1] - c[0]))
            if abs(norm - 1.0) > 1e-6:
                raise PumpError(f"sampled pump must be normalized; got L2 norm {norm!r}")
            object.__setattr__(self, "coordinates", c)
            object.__setattr__(self, "amplitudes", a)

    @classmethod
    def plane_wave(cls, regularization_width: float = 0.1) -> "PumpProfile":
        """Plane-wave pump regularized as a Gaussian of the given width."""
        return cls("plane_wave", width=regularization_width)

    @classmethod
    def gaussian(cls, width: float) -> "PumpProfile":
        return cls("gaussian", width=width)

    @classmethod
    def sampled(cls, coordinates, amplitudes) -> "PumpProfile":
        return cls("sampled", coordinates=np.asarray(coordinates), amplitudes=np.asarray(amplitudes))

    def evaluate(self, q: np.ndarray) -> np.ndarray:
        """Amplitude v(q); Gaussian kinds use exp(-q^2/(2 width^2)), so the
        two-photon sum coordinate inherits Var(q1+q2) = width^2/2."""
        if self.kind in ("plane_wave", "gaussian"):
            return np.exp(-(q * q) / (2 * self.width**2)).astype(complex)
        re = np.interp(q, self.coordinates, self.amplitudes.real, left=0.0, right=0.0)
        im = np.interp(q, self.coordinates, self.amplitudes.imag, left=0.0, right=0.0)
        return re + 1j * im


@dataclass(frozen=True)
class ClusterSpec:
    """Nodes, weighted edges and per-node squeezing of a cluster state.

    ``node_squeezing`` maps node label -> w_p (a bare float applies to all
    nodes); the regularized |p=0> node is a position Gaussian of width
    1/w_p, so Var(p) = w_p^2/2 per node.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...] = ()
    node_squeezing: float | dict = 0.1

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if not 1 <= len(nodes) <= 4:
            raise TopologyError(f"supported clusters have 1..4 nodes, got {len(nodes)}")
        if len(set(nodes)) != len(nodes):
            raise DofLabelError(f"duplicate node labels in {nodes}")
        edges = []
        for e in self.edges:
            a, b = e[0], e[1]
            g = float(e[2]) if len(e) > 2 else 1.0
            if a not in nodes or b not in nodes:
                raise DofLabelError(f"edge ({a}, {b}) references unknown nodes")
            if a == b:
                raise TopologyError(f"self-edge on {a}")
            edges.append((a, b, g))
        for label, w in ((n, self.squeezing_of(n)) for n in nodes):
            if not w > 0:
                raise ValueError(f"node_squeezing for {label} must be > 0, got {w}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(edges))

    def squeezing_of(self, node: str) -> float:
        if isinstance(self.node_squeezing, dict):
            try:
                return float(self.node_squeezing[node])
            except KeyError:
                raise DofLabelError(f"node_squeezing missing entry for {node!r}") from None
        return float(self.node_squeezing)


def fig5_linear_spec(w_p: float = 0.1) -> ClusterSpec:
    """Linear 4-node cluster x2 - x1 - y1 - y2: two source links (weight -1,
    the sign this package's SPDC + Fourier construction produces) and one
    CZ edge on photon 1."""
    return ClusterSpec(
        nodes=PHOTONIC_LABELS,
        edges=(("x1", "x2", -1.0), ("y1", "y2", -1.0), ("x1", "y1", 1.0)),
        node_squeezing=w_p,
    )


def fig5_ring_spec(w_p: float = 0.1) -> ClusterSpec:
    """Ring cluster: the linear edges plus the CZ edge on photon 2."""
    return ClusterSpec(
        nodes=PHOTONIC_LABELS,
        edges=(
            ("x1", "x2", -1.0),
            ("y1", "y2", -1.0),
            ("x1", "y1", 1.0),
            ("x2", "y2", 1.0),
        ),
        node_squeezing=w_p,
    )


# ---------------------------------------------------------------------------
# linked multi-DOF container

@dataclass(frozen=True)
class CzLink:
    dof_a: str
    dof_b: str
    weight: float


@dataclass(frozen=True)
class LinkedState:
    """Product of 1- and 2-DOF components with pending cross-component CZ
    phase links Prod exp(i g x_a x_b)."""

    components: tuple
    component_labels: tuple[tuple[str, ...], ...]
    links: tuple[CzLink, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "component_labels", tuple(tuple(l) for l in self.component_labels))
        object.__setattr__(self, "links", tuple(self.links))
        if len(self.components) != len(self.component_labels):
            raise ValueError("components and component_labels length mismatch")
        seen: set[str] = set()
        for comp, labels in zip(self.components, self.component_labels):
            if isinstance(comp, BipartiteWaveFunction):
                if labels != comp.dof_labels:
                    raise DofLabelError(f"labels {labels} do not match component {comp.dof_labels}")
            elif isinstance(comp, SampledWaveFunction1D):
                if len(labels) != 1:
                    raise DofLabelError(f"1-DOF component needs one label, got {labels}")
            else:
                raise TypeError(f"unsupported component type {type(comp)}")
            for l in labels:
                if l in seen:
                    raise DofLabelError(f"duplicate DOF label {l!r}")
                seen.add(l)
        for link in self.links:
            if link.dof_a not in seen or link.dof_b not in seen:
                raise DofLabelError(f"link ({link.dof_a}, {link.dof_b}) references unknown DOF")
            comp_a = next(i for i, ls in enumerate(self.component_labels) if link.dof_a in ls)
            comp_b = next(i for i, ls in enumerate(self.component_labels) if link.dof_b in ls)
            if comp_a == comp_b:
                raise TopologyError(
                    f"link ({link.dof_a}, {link.dof_b}) lies inside one component; "
                    f"apply it to the amplitude instead"
                )

    @property
    def dof_labels(self) -> tuple[str, ...]:
        return tuple(l for labels in self.component_labels for l in labels)

    def locate(self, label: str) -> tuple[int, int]:
        for i, labels in enumerate(self.component_labels):
            if label in labels:
                return i, labels.index(label)
        raise DofLabelError(f"unknown DOF {label!r}; state has {self.dof_labels}")

    def links_touching(self, label: str) -> tuple[CzLink, ...]:
        return tuple(l for l in self.links if label in (l.dof_a, l.dof_b))


def _as_linked(state, node_label: str | None = None) -> LinkedState:
    if isinstance(state, LinkedState):
        return state
    if isinstance(state, BipartiteWaveFunction):
        return LinkedState((state,), (state.dof_labels,))
    if isinstance(state, SampledWaveFunction1D):
        return LinkedState((state,), ((node_label or "psi",),))
    raise TypeError(f"unsupported state type {type(state)}")


# ---------------------------------------------------------------------------
# entangling constructors

def product_pair(
    psi_a: SampledWaveFunction1D, psi_b: SampledWaveFunction1D, labels: tuple[str, str]
) -> BipartiteWaveFunction:
    amps = np.outer(psi_a.amplitudes, psi_b.amplitudes)
    return BipartiteWaveFunction(
        psi_a.grid, psi_b.grid, amps, labels,
        (psi_a.representation, psi_b.representation), psi_a.scale,
    )


def cz_xy(state: BipartiteWaveFunction, g: float = 1.0) -> BipartiteWaveFunction:
    """Controlled-phase exp(i g x_a x_b) between the two DOF of a joint state.

    Both DOF must be in the position representation; both single-DOF
    position marginals are unchanged (pure phase).
    """
    if state.representations != (POSITION, POSITION):
        raise RepresentationError(
            f"cz_xy needs both DOF in position representation, got {state.representations}"
        )
    xa = state.grid_a.positions
    xb = state.grid_b.positions
    # gradient of the phase in one DOF is bounded by |g| times the partner's
    # occupied support, not the full grid extent
    from .wavefield import support_bounds

    rho_a = np.sum(np.abs(state.amplitudes) ** 2, axis=1)
    rho_b = np.sum(np.abs(state.amplitudes) ** 2, axis=0)
    lo_a, hi_a = support_bounds(np.sqrt(rho_a), xa)
    lo_b, hi_b = support_bounds(np.sqrt(rho_b), xb)
    for partner_reach, grid, name in (
        (max(abs(lo_b), abs(hi_b)), state.grid_a, "a"),
        (max(abs(lo_a), abs(hi_a)), state.grid_b, "b"),
    ):
        gradient = abs(g) * partner_reach
        nyquist = math.pi / grid.spacing
        if gradient >= nyquist:
            warnings.warn(
                f"cz phase gradient {gradient:.3g} on DOF {name} exceeds Nyquist "
                f"{nyquist:.3g}; conjugate-basis quantities of the joint state "
                f"will alias (position-basis ones stay exact)",
                NyquistWarning,
                stacklevel=2,
            )
    amps = state.amplitudes * np.exp(1j * g * np.outer(xa, xb))
    return BipartiteWaveFunction(
        state.grid_a, state.grid_b, amps, state.dof_labels, state.representations, state.scale
    )


def fwm_entangle(
    q_total: float,
    sigma_corr: float,
    sigma_env: float,
    grid_s: Grid1D,
    grid_i: Grid1D,
    scale: ScaleContext,
    labels: tuple[str, str] = ("x1", "x2"),
) -> BipartiteWaveFunction:
    """Regularized EPR pair from thin-medium four-wave mixing.

    amplitude(q_s, q_i) ~ exp(-(q_s+q_i-Q)^2/(4 sigma_corr^2))
                        * exp(-(q_s-q_i)^2/(4 sigma_env^2))
    in the wavevector representation; Var(q_s + q_i) = sigma_corr^2.  The
    sigma_corr -> 0, sigma_env -> inf limit is the ideal momentum-
    anticorrelated EPR state about Q.
    """
    if not (sigma_corr > 0 and sigma_env > 0):
        raise ValueError("sigma_corr and sigma_env must be positive")
    if not sigma_corr < sigma_env / 2:
        warnings.warn(
            f"fwm_entangle expects sigma_corr << sigma_env, got {sigma_corr} vs {sigma_env}",
            UserWarning,
            stacklevel=2,
        )
    marg_sd = math.sqrt(sigma_corr**2 + sigma_env**2) / 2
    for grid, name in ((grid_s, "signal"), (grid_i, "idler")):
        conj = grid.conjugate
        if abs(q_total) / 2 + 5 * marg_sd >= conj.half_extent:
            raise SupportOverflowError(
                f"{name} conjugate grid (extent {conj.half_extent:.2f}) cannot hold the "
                f"EPR marginal (|Q|/2 + 5 sigma = {abs(q_total)/2 + 5*marg_sd:.2f})"
            )
        if conj.spacing > sigma_corr / 2:
            raise SupportOverflowError(
                f"{name} conjugate spacing {conj.spacing:.3g} cannot resolve "
                f"sigma_corr = {sigma_corr}"
            )
    qs = grid_s.conjugate_positions
    qi = grid_i.conjugate_positions
    s_coord = qs[:, None] + qi[None, :] - q_total
    d_coord = qs[:, None] - qi[None, :]
    amps = np.exp(-(s_coord**2) / (4 * sigma_corr**2) - (d_coord**2) / (4 * sigma_env**2))
    measure = grid_s.conjugate_spacing * grid_i.conjugate_spacing
    return BipartiteWaveFunction(
        grid_s, grid_i, normalized(amps, 1.0) / math.sqrt(measure), labels,
        (WAVEVECTOR, WAVEVECTOR), scale,
    )


def spdc_state(
    pump: PumpProfile,
    grid_1: Grid1D,
    grid_2: Grid1D,
    scale: ScaleContext,
    labels: tuple[str, str] = ("x1", "x2"),
) -> BipartiteWaveFunction:
    """Biphoton state of one transverse axis: amplitude(q1, q2) ~ v(q1+q2).

    gamma is taken to be 1 throughout, so the amplitude depends on (q1, q2)
    only through the sum; a plane-wave pump is a narrow Gaussian v of the
    profile's regularization width, for which the state factorizes per axis.
    """
    q1 = grid_1.conjugate_positions
    q2 = grid_2.conjugate_positions
    amps = pump.evaluate(q1[:, None] + q2[None, :])
    total = float(np.sum(np.abs(amps) ** 2))
    if not (total > 0 and math.isfinite(total)):
        raise PumpError("pump profile is not normalizable on the two-photon sum grid")
    measure = grid_1.conjugate_spacing * grid_2.conjugate_spacing
    return BipartiteWaveFunction(
        grid_1, grid_2, normalized(amps, 1.0) / math.sqrt(measure), labels,
        (WAVEVECTOR, WAVEVECTOR), scale,
    )


def fourier_one_side(state: BipartiteWaveFunction, which: str) -> BipartiteWaveFunction:
    """Apply the Fourier gate to one DOF of a joint state.

    On a wavevector-represented DOF this is the exact relabeling
    F|q> = |x = q> (amplitudes unchanged, the DOF's grid becomes its
    conjugate); on a position-represented DOF it is F|x> = |p = -x>
    (a mirrored relabeling).  Applying it twice yields the parity on that
    DOF.  Norm is preserved exactly.
    """
    axis = state.axis_of(which)
    grids = [state.grid_a, state.grid_b]
    reps = list(state.representations)
    amps = state.amplitudes
    if reps[axis] == WAVEVECTOR:
        reps[axis] = POSITION
    else:
        reps[axis] = WAVEVECTOR
        amps = parity_flip(amps, axis=axis)
    grids[axis] = grids[axis].conjugate
    return BipartiteWaveFunction(
        grids[0], grids[1], amps, state.dof_labels, tuple(reps), state.scale
    )


def node_state(grid: Grid1D, w_p: float, scale: ScaleContext) -> SampledWaveFunction1D:
    """Regularized |p=0> node: position Gaussian of width 1/w_p
    (Var(p) = w_p^2/2)."""
    return make_gaussian(grid, 0.0, 0.0, 1.0 / w_p, scale)


def build_cluster(
    spec: ClusterSpec,
    grid: Grid1D,
    scale: ScaleContext,
    realization: str = "generic",
):
    """Assemble the cluster state for a spec.

    ``generic``: every node is a regularized |p=0> Gaussian and every edge a
    CZ phase.  One node returns a SampledWaveFunction1D; two nodes a
    BipartiteWaveFunction with the edge phase multiplied into the joint
    amplitude; three or four nodes a LinkedState of 1-DOF components with
    every edge tracked as an exact symbolic link (materializing the phases
    of wide node states would alias the conjugate grid long before the
    diagnostics converge).

    ``linked``: as generic but the two-node case also stays in link form;
    use it for nullifier diagnostics at strong squeezing, where the
    materialized chirp of a two-node pair cannot be Nyquist-sampled.

    ``photonic``: the two-photon realization of the fig.-5 topologies:
    plane-wave SPDC on each transverse axis (pump regularization width =
    node squeezing), the Fourier gate on photon 2's DOF, and the remaining
    CZ edges as links.  Requires the canonical labels x1, y1, x2, y2 with
    source edges (x1, x2, -1) and (y1, y2, -1).
    """
    if realization == "photonic":
        return _build_photonic(spec, grid, scale)
    if realization not in ("generic", "linked"):
        raise ValueError(f"unknown realization {realization!r}")

    nodes = spec.nodes
    states = {n: node_state(grid, spec.squeezing_of(n), scale) for n in nodes}

    if len(nodes) == 1:
        return states[nodes[0]]

    if len(nodes) == 2 and realization == "generic":
        pair = product_pair(states[nodes[0]], states[nodes[1]], (nodes[0], nodes[1]))
        for _, _, g in spec.edges:
            pair = cz_xy(pair, g)
        return pair

    components = tuple(states[n] for n in nodes)
    labels = tuple((n,) for n in nodes)
    links = tuple(CzLink(a, b, g) for a, b, g in spec.edges)
    return LinkedState(components, labels, links)


def _build_photonic(spec: ClusterSpec, grid: Grid1D, scale: ScaleContext) -> LinkedState:
    if set(spec.nodes) != set(PHOTONIC_LABELS):
        raise TopologyError(
            f"photonic realization needs nodes {PHOTONIC_LABELS}, got {spec.nodes}"
        )
    w_values = {spec.squeezing_of(n) for n in spec.nodes}
    if len(w_values) != 1:
        raise TopologyError("photonic realization uses one pump width; node_squeezing must be uniform")
    w_p = w_values.pop()

    source_edges = {("x1", "x2"), ("y1", "y2")}
    cz_edges = []
    seen_sources = set()
    for a, b, g in spec.edges:
        key = tuple(sorted((a, b)))
        if key in {tuple(sorted(e)) for e in source_edges}:
            if g != -1.0:
                raise TopologyError(
                    f"source edge {key} carries the construction's kernel exp(-i x x'); "
                    f"its weight is -1, got {g}"
                )
            seen_sources.add(key)
        elif key in (("x1", "y1"), ("x2", "y2")):
            cz_edges.append((a, b, g))
        else:
            raise TopologyError(f"photonic realization cannot wire edge {key}")
    if seen_sources != {("x1", "x2"), ("y1", "y2")}:
        raise TopologyError("photonic realization requires both source edges (x1,x2) and (y1,y2)")

    pump = PumpProfile.plane_wave(w_p)
    pair_x = fourier_one_side(spdc_state(pump, grid, grid, scale, ("x1", "x2")), "x2")
    pair_y = fourier_one_side(spdc_state(pump, grid, grid, scale, ("y1", "y2")), "y2")
    links = tuple(CzLink(a, b, g) for a, b, g in cz_edges)
    return LinkedState((pair_x, pair_y), (("x1", "x2"), ("y1", "y2")), links)


# ---------------------------------------------------------------------------
# nullifier diagnostics

def _diag_values(comp, coeffs: dict[str, float], p_label: str | None):
    """Mean and variance of a sum of DOF-diagonal operators on one component.

    ``coeffs`` maps label -> coefficient of x̂; ``p_label`` names the DOF
    whose p̂ enters with coefficient 1.  Axes are converted so every term is
    diagonal: the p-DOF to the wavevector basis, x-DOFs to position.
    """
    if isinstance(comp, SampledWaveFunction1D):
        if p_label is not None and coeffs:
            raise RepresentationError("x and p of the same 1-DOF component are not simultaneous")
        label = p_label if p_label is not None else next(iter(coeffs))
        want = WAVEVECTOR if p_label is not None else POSITION
        psi = comp
        if psi.representation != want:
            from .wavefield import to_conjugate_representation

            psi = to_conjugate_representation(psi)
        values = psi.coordinates * (1.0 if p_label is not None else coeffs[label])
        rho = np.abs(psi.amplitudes) ** 2 * psi.active_spacing
        mean = float(np.sum(values * rho))
        var = float(np.sum((values - mean) ** 2 * rho))
        return mean, var

    state: BipartiteWaveFunction = comp
    targets = {}
    for i, label in enumerate(state.dof_labels):
        if label == p_label:
            targets[i] = WAVEVECTOR
        elif coeffs.get(label):
            targets[i] = POSITION
    for i, rep in targets.items():
        state = convert_axis(state, state.dof_labels[i], rep)

    va = np.zeros(state.grid_a.num_samples)
    vb = np.zeros(state.grid_b.num_samples)
    for axis, vec in ((0, va), (1, vb)):
        label = state.dof_labels[axis]
        if label == p_label:
            vec += state.coordinates_of(label)
        if coeffs.get(label):
            if label == p_label:
                raise RepresentationError(f"x and p of {label!r} are not simultaneously diagonal")
            vec += coeffs[label] * state.coordinates_of(label)

    rho = state.density()
    pa = rho.sum(axis=1)
    pb = rho.sum(axis=0)
    ea, eb = float(va @ pa), float(vb @ pb)
    ea2, eb2 = float((va * va) @ pa), float((vb * vb) @ pb)
    eab = float(va @ (rho @ vb))
    mean = ea + eb
    second = ea2 + 2 * eab + eb2
    return mean, second - mean**2


def nullifier_variance(state, node: str, neighbors, weights=None) -> float:
    """Var(p̂_node - sum_b w_b x̂_b) over the joint state.

    Cross-component CZ links are folded into the operator
    (p̂_i -> p̂_i + g x̂_j), after which every term is diagonal in a suitable
    per-axis basis; component variances add by independence.
    """
    linked = _as_linked(state, node_label=node)
    neighbors = list(neighbors)
    weights = [1.0] * len(neighbors) if weights is None else [float(w) for w in weights]
    if len(weights) != len(neighbors):
        raise ValueError("weights must match neighbors")
    if node in neighbors:
        raise DofLabelError(f"node {node!r} cannot be its own neighbor")
    linked.locate(node)
    x_coeffs: dict[str, float] = {}
    for b, w in zip(neighbors, weights):
        linked.locate(b)
        x_coeffs[b] = x_coeffs.get(b, 0.0) - w
    for link in linked.links_touching(node):
        other = link.dof_b if link.dof_a == node else link.dof_a
        x_coeffs[other] = x_coeffs.get(other, 0.0) + link.weight

    total_var = 0.0
    for comp, labels in zip(linked.components, linked.component_labels):
        local = {l: c for l, c in x_coeffs.items() if l in labels and c != 0.0}
        p_here = node if node in labels else None
        if not local and p_here is None:
            continue
        _, var = _diag_values(comp, local, p_here)
        total_var += var
    return total_var


def dof_moments(state: BipartiteWaveFunction, label: str):
    """MomentSummary of one DOF of a joint state (partner traced out).

    x moments from the position marginal, p moments from the wavevector
    marginal, and the symmetrized cross term evaluated spectrally along the
    DOF's axis.
    """
    from .wavefield import (
        MomentSummary,
        position_to_wavevector_amplitudes,
        wavevector_to_position_amplitudes,
    )

    w = convert_axis(state, label, POSITION)
    axis = w.axis_of(label)
    grid = (w.grid_a, w.grid_b)[axis]
    x = grid.positions
    _, rho_x = w.marginal(label)
    dx = grid.spacing
    mean_x = float(np.sum(x * rho_x) * dx)
    var_x = float(np.sum((x - mean_x) ** 2 * rho_x) * dx)

    v = convert_axis(w, label, WAVEVECTOR)
    p = grid.conjugate_positions
    _, rho_p = v.marginal(label)
    dp = grid.conjugate_spacing
    mean_p = float(np.sum(p * rho_p) * dp)
    var_p = float(np.sum((p - mean_p) ** 2 * rho_p) * dp)

    shape = [1, 1]
    shape[axis] = grid.num_samples
    v_amps = position_to_wavevector_amplitudes(w.amplitudes, grid, axis=axis)
    p_psi = wavevector_to_position_amplitudes(p.reshape(shape) * v_amps, grid, axis=axis)
    cross = float(
        np.real(np.sum(np.conj(w.amplitudes) * x.reshape(shape) * p_psi)) * w.measure
    ) - mean_x * mean_p

    return MomentSummary(
        mean=np.array([mean_x, mean_p]),
        covariance=np.array([[var_x, cross], [cross, var_p]]),
    )


# ---------------------------------------------------------------------------
# projective measurement

@dataclass(frozen=True)
class MeasurementResult:
    """Collapsed remainder state (None when no DOF survives), the snapped
    outcome, and the marginal probability density at that outcome."""

    state: object | None
    outcome: float
    density: float


def _pick_index(coords: np.ndarray, probs: np.ndarray, outcome, rng) -> int:
    if outcome is not None:
        return int(np.argmin(np.abs(coords - outcome)))
    if rng is None:
        raise ValueError("sampling a measurement requires a seeded numpy Generator")
    p = probs / probs.sum()
    return int(rng.choice(len(coords), p=p))


def measure_position(state, dof: str, outcome: float | None = None, rng=None) -> MeasurementResult:
    """Projective position measurement on one DOF.

    Requested outcomes snap to the nearest grid sample; the returned
    MeasurementResult carries the snapped value and the marginal density
    there.  Sampling mode (outcome=None) draws from the exact discrete
    marginal with the caller's Generator.  The conditional state on the
    remaining DOF is renormalized; a ~zero-density outcome raises
    ZeroProbabilityError.
    """
    if isinstance(state, SampledWaveFunction1D):
        if state.representation != POSITION:
            raise RepresentationError("measure_position needs the DOF in position representation")
        coords = state.coordinates
        rho = np.abs(state.amplitudes) ** 2
        j = _pick_index(coords, rho * state.active_spacing, outcome, rng)
        density = float(rho[j])
        if density < _DENSITY_FLOOR:
            raise ZeroProbabilityError(f"outcome {coords[j]} has density {density}")
        return MeasurementResult(None, float(coords[j]), density)

    if isinstance(state, BipartiteWaveFunction):
        axis = state.axis_of(dof)
        if state.representations[axis] != POSITION:
            raise RepresentationError(f"DOF {dof!r} is not in position representation")
        coords, rho = state.marginal(dof)
        spacing = state.spacing_of(dof)
        j = _pick_index(coords, rho * spacing, outcome, rng)
        density = float(rho[j])
        if density < _DENSITY_FLOOR:
            raise ZeroProbabilityError(f"outcome {coords[j]} has density {density}")
        cut = np.take(state.amplitudes, j, axis=axis)
        other = 1 - axis
        grid_o = (state.grid_a, state.grid_b)[other]
        rep_o = state.representations[other]
        collapsed = SampledWaveFunction1D(
            grid_o, normalized(cut, grid_o.spacing_of(rep_o)), rep_o, state.scale
        )
        return MeasurementResult(collapsed, float(coords[j]), density)

    if isinstance(state, LinkedState):
        return _measure_linked(state, dof, outcome, rng)
    raise TypeError(f"unsupported state type {type(state)}")


def _apply_linear_phase(comp, label: str, slope: float):
    """Multiply exp(i slope x_label) into a component (position basis)."""
    if isinstance(comp, SampledWaveFunction1D):
        from .wavefield import as_representation

        w = as_representation(comp, POSITION)
        return SampledWaveFunction1D(
            w.grid, w.amplitudes * np.exp(1j * slope * w.coordinates), POSITION, w.scale
        )
    w = convert_axis(comp, label, POSITION)
    axis = w.axis_of(label)
    phase = np.exp(1j * slope * w.coordinates_of(label))
    shape = [1, 1]
    shape[axis] = len(phase)
    return BipartiteWaveFunction(
        w.grid_a, w.grid_b, w.amplitudes * phase.reshape(shape), w.dof_labels,
        w.representations, w.scale,
    )


def _measure_linked(state: LinkedState, dof: str, outcome, rng) -> MeasurementResult:
    idx, _ = state.locate(dof)
    comp = state.components[idx]
    inner = measure_position(comp, dof, outcome, rng)

    components = list(state.components)
    labels = [list(l) for l in state.component_labels]
    if inner.state is None:
        del components[idx], labels[idx]
    else:
        components[idx] = inner.state
        labels[idx] = [l for l in labels[idx] if l != dof]

    links = []
    for link in state.links:
        if dof in (link.dof_a, link.dof_b):
            other = link.dof_b if link.dof_a == dof else link.dof_a
            for i, ls in enumerate(labels):
                if other in ls:
                    components[i] = _apply_linear_phase(
                        components[i], other, link.weight * inner.outcome
                    )
                    break
        else:
            links.append(link)

    if not components:
        return MeasurementResult(None, inner.outcome, inner.density)
    if len(components) == 1 and not links:
        return MeasurementResult(components[0], inner.outcome, inner.density)
    remainder = LinkedState(tuple(components), tuple(tuple(l) for l in labels), tuple(links))
    return MeasurementResult(remainder, inner.outcome, inner.density)


def _rotate_dof(state, dof: str, theta: float, f, scale: ScaleContext | None):
    if isinstance(state, SampledWaveFunction1D):
        return frft_gate(state, theta, f, scale)
    if isinstance(state, BipartiteWaveFunction):
        if f is not None:
            from .gates import _check_frft_scale

            _check_frft_scale(theta, f, scale or state.scale)
        axis = state.axis_of(dof)
        w = convert_axis(state, dof, POSITION)
        grid = (w.grid_a, w.grid_b)[axis]
        amps = frft_amplitudes(w.amplitudes, grid, theta, axis=axis)
        amps = normalized(amps, 1.0) / math.sqrt(w.measure)
        return BipartiteWaveFunction(
            w.grid_a, w.grid_b, amps, w.dof_labels, w.representations, w.scale
        )
    raise TypeError(f"unsupported state type {type(state)}")


def measure_quadrature(
    state,
    dof: str,
    theta: float,
    f: float | None = None,
    outcome: float | None = None,
    rng=None,
) -> MeasurementResult:
    """Rotate the DOF by theta (FRFT) and measure position.

    theta = 0 reduces to measure_position bit for bit; theta = pi/2 measures
    the wavevector quadrature.  On a LinkedState the DOF must not carry
    pending CZ links (rotating a linked DOF would require materializing the
    joint amplitude).
    """
    action, _ = frft_plan(theta)
    if action == "identity":
        return measure_position(state, dof, outcome, rng)
    if isinstance(state, LinkedState):
        if state.links_touching(dof):
            raise TopologyError(
                f"DOF {dof!r} carries CZ links; quadrature measurement would need the "
                f"dense joint amplitude"
            )
        idx, _ = state.locate(dof)
        components = list(state.components)
        components[idx] = _rotate_dof(components[idx], dof, theta, f, None)
        rotated = LinkedState(tuple(components), state.component_labels, state.links)
        return measure_position(rotated, dof, outcome, rng)
    rotated = _rotate_dof(state, dof, theta, f, None)
    return measure_position(rotated, dof, outcome, rng)
