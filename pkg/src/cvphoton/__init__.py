"""cvphoton: continuous-variable quantum information in the transverse
spatial degrees of freedom of paraxial photons.

Subpackages: :mod:`~cvphoton.wavefield` (grids, states, moments),
:mod:`~cvphoton.gates` (single-photon gate set), :mod:`~cvphoton.symplectic`
(ABCD shadow and layout compiler), :mod:`~cvphoton.entangle` (two-DOF and
two-photon states, clusters, measurement), :mod:`~cvphoton.oracle` (dense
reference transforms) and :mod:`~cvphoton.cli` (scenario runner).
"""

__version__ = "0.1.0"

from .entangle import (
    ClusterSpec,
    CzLink,
    LinkedState,
    MeasurementResult,
    PumpProfile,
    build_cluster,
    cz_xy,
    dof_moments,
    fig5_linear_spec,
    fig5_ring_spec,
    fourier_one_side,
    fwm_entangle,
    measure_position,
    measure_quadrature,
    node_state,
    nullifier_variance,
    spdc_state,
)
from .gates import (
    GateDescriptor,
    GateProgram,
    apply_program,
    fourier,
    frft,
    frft_focal_length,
    lens,
    pauli_x,
    pauli_z,
    phase_poly,
    propagate,
    single_lens_system,
    squeeze,
)
from .oracle import DenseKernel, fresnel_dense, frft_dense
from .symplectic import (
    LayoutElement,
    OpticalLayout,
    RayMatrix,
    abcd_of_gate,
    abcd_of_program,
    abcd_of_single_lens,
    decompose_to_gates,
    layout_of,
    layout_to_table,
    predict_moments,
    simulate_layout,
)
from .wavefield import (
    BipartiteWaveFunction,
    Grid1D,
    MomentSummary,
    SampledWaveFunction1D,
    ScaleContext,
    make_gaussian,
    make_hermite_gauss,
    moments,
    overlap,
    to_conjugate_representation,
)
