import math

import numpy as np
import pytest

from conftest import hg_superposition, l2_diff, l2_diff_mod_phase
from cvphoton import oracle
from cvphoton.errors import (
    NyquistViolationError,
    NyquistWarning,
    ScaleMismatchError,
    SupportOverflowError,
    UnsupportedGateError,
)
from cvphoton.gates import (
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
from cvphoton.symplectic import (
    abcd_of_gate,
    abcd_of_single_lens,
    dimensional_to_dimensionless,
    predict_moments,
)
from cvphoton.wavefield import (
    Grid1D,
    SampledWaveFunction1D,
    ScaleContext,
    as_representation,
    make_gaussian,
    make_hermite_gauss,
    moments,
    overlap,
    parity_flip,
    position_marginal,
    to_conjugate_representation,
    wavevector_marginal,
)

BIG = Grid1D(1024, 16.0)


class TestPropagate:
    def test_zero_distance_is_identity(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        assert l2_diff(propagate(psi, 0.0, scale), psi) < 1e-14

    def test_variance_growth_matches_abcd(self, scale):
        psi = make_gaussian(BIG, 0.0, 0.0, 1.0, scale)
        z = 0.8
        rm = dimensional_to_dimensionless(
            abcd_of_single_lens(z / 2, math.inf, scale.wavenumber_k), scale
        ) if False else None
        # free space alone: abcd via gate image
        rm = abcd_of_gate(GateDescriptor.propagate(z), scale)
        predicted = predict_moments(rm, moments(psi))
        got = moments(propagate(psi, z, scale))
        assert np.allclose(got.covariance, predicted.covariance, atol=1e-9)

    def test_mean_drift_of_tilted_state(self, scale):
        # narrow momentum state: mean position walks by z * p / (k d^2)
        psi = make_gaussian(BIG, 0.0, 2.0, 2.0, scale)
        z = 1.0
        got = moments(propagate(psi, z, scale))
        assert got.mean[0] == pytest.approx(2.0 * z / scale.fractional_focal, abs=1e-9)

    def test_negative_distance(self, grid, scale):
        with pytest.raises(ValueError):
            propagate(make_gaussian(grid, 0, 0, 1, scale), -0.1, scale)


class TestLens:
    def test_position_marginal_unchanged(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        for f in (0.7, -1.3, 4.0):
            out = lens(psi, f, scale)
            assert np.max(np.abs(np.abs(out.amplitudes) ** 2 - np.abs(psi.amplitudes) ** 2)) < 1e-14

    def test_infinite_focal_length_is_identity(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        assert l2_diff(lens(psi, math.inf, scale), psi) < 1e-14

    def test_chirp_changes_cross_term(self, grid, scale):
        f = 1.7
        psi = make_hermite_gauss(grid, 0, scale)
        before = moments(psi)
        after = moments(lens(psi, f, scale))
        expected = before.cov_xp - scale.fractional_focal * before.var_x / f
        assert after.cov_xp == pytest.approx(expected, abs=1e-9)
        assert after.var_x == pytest.approx(before.var_x, abs=1e-12)

    def test_zero_focal_length(self, grid, scale):
        with pytest.raises(ValueError):
            lens(make_gaussian(grid, 0, 0, 1, scale), 0.0, scale)


class TestSingleLensSystem:
    def test_z_equals_f_realizes_fourier(self, scale):
        # input angular spectrum becomes the output position wavefunction;
        # oracle: dense quadrature of the transform integral evaluated at
        # the position samples themselves
        f = scale.fractional_focal
        psi = make_gaussian(BIG, 0.4, -0.6, 1.1, scale)
        out = single_lens_system(psi, f, f, scale)
        x = BIG.positions
        v_at_x = (
            np.exp(-1j * np.outer(x, x)) @ psi.amplitudes * BIG.spacing / math.sqrt(2 * math.pi)
        )
        assert np.max(np.abs(np.abs(out.amplitudes) ** 2 - np.abs(v_at_x) ** 2)) < 1e-9

    def test_imaging_with_inversion_at_2f(self, scale):
        f = 0.9
        psi = make_gaussian(BIG, 0.7, 0.3, 1.0, scale)
        out = single_lens_system(psi, 2 * f, f, scale)
        rm = dimensional_to_dimensionless(
            abcd_of_single_lens(2 * f, f, scale.wavenumber_k), scale
        )
        assert np.allclose(rm.m, [[-1.0, 0.0], [-scale.fractional_focal / f, -1.0]], atol=1e-12)
        got = moments(out)
        predicted = predict_moments(rm, moments(psi))
        assert np.allclose(got.mean, predicted.mean, atol=1e-8)

    def test_random_systems_match_symplectic_oracle(self, scale):
        rng = np.random.default_rng(8)
        psi0 = make_gaussian(BIG, 0.2, -0.1, 1.05, scale)
        for _ in range(10):
            z = rng.uniform(0.0, 0.8)
            f = rng.choice([-1.0, 1.0]) * rng.uniform(0.8, 2.5)
            out = single_lens_system(psi0, z, f, scale)
            rm = dimensional_to_dimensionless(
                abcd_of_single_lens(z, f, scale.wavenumber_k), scale
            )
            predicted = predict_moments(rm, moments(psi0))
            got = moments(out)
            assert np.max(np.abs(got.covariance - predicted.covariance)) < 1e-8


class TestFourier:
    def test_hg_eigenphases_against_dense_oracle(self, grid, scale):
        for n in (0, 1, 2, 5):
            hg = make_hermite_gauss(grid, n, scale)
            out = fourier(hg)
            ov = overlap(hg, out)
            assert abs(ov - np.exp(-1j * n * math.pi / 2)) < 1e-9
            dense = oracle.frft_dense(hg, math.pi / 2)
            assert l2_diff(out, dense) < 1e-6

    def test_double_fourier_is_parity(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        out = fourier(fourier(psi))
        flipped = SampledWaveFunction1D(grid, parity_flip(psi.amplitudes), "position", scale)
        assert l2_diff(out, flipped) < 1e-10

    def test_gaussian_width_inverts(self, grid, scale):
        psi = make_gaussian(grid, 0.0, 0.0, 1.6, scale)
        out = fourier(psi)
        assert moments(out).var_x == pytest.approx(1 / (2 * 1.6**2), rel=1e-9)

    def test_scale_mismatch(self, grid, scale):
        psi = make_gaussian(grid, 0, 0, 1, scale)
        with pytest.raises(ScaleMismatchError):
            fourier(psi, f=2.0)  # pinned d^2 k = 1


class TestFrft:
    def test_full_turn_is_identity(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        assert l2_diff(frft(psi, 2 * math.pi), psi) < 1e-9

    def test_additivity_against_dense_kernel(self, grid, scale, rng):
        for _ in range(5):
            t1, t2 = rng.uniform(0.3, 1.3, size=2)
            psi = hg_superposition(grid, scale, rng)
            composed = frft(frft(psi, float(t2)), float(t1))
            dense = oracle.frft_dense(psi, float(t1 + t2))
            assert l2_diff(composed, dense) < 1e-6

    def test_ground_state_invariant(self, grid, scale):
        hg0 = make_hermite_gauss(grid, 0, scale)
        for theta in (0.3, 1.1, 2.7, 4.0):
            out = frft(hg0, theta)
            assert l2_diff_mod_phase(out, hg0) < 1e-9

    def test_parity_dispatch_is_exact(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        out = frft(psi, math.pi)
        assert np.array_equal(out.amplitudes, parity_flip(psi.amplitudes))

    def test_focal_length_consistency(self, grid, scale):
        psi = make_gaussian(grid, 0, 0, 1, scale)
        theta = 0.8
        f_ok = frft_focal_length(theta, scale)
        frft(psi, theta, f=f_ok)
        with pytest.raises(ScaleMismatchError):
            frft(psi, theta, f=2 * f_ok)


class TestSqueeze:
    def test_unit_magnification_is_exact_inversion(self, scale, rng):
        psi = hg_superposition(BIG, scale, rng, max_order=6)
        out = squeeze(psi, 1.3, 1.3, scale)
        flipped = SampledWaveFunction1D(BIG, parity_flip(psi.amplitudes), "position", scale)
        assert l2_diff(out, flipped) < 1e-10

    def test_width_scaling(self, scale):
        psi = make_gaussian(BIG, 0.0, 0.0, 1.0, scale)
        out = squeeze(psi, 1.0, 2.0, scale)
        ms = moments(out)
        assert ms.var_x == pytest.approx(4 * 0.5, rel=1e-9)
        assert ms.var_p == pytest.approx(0.5 / 4, rel=1e-9)

    def test_hg1_second_moments(self, scale):
        wide = Grid1D(1024, 24.0)
        psi = make_hermite_gauss(wide, 1, scale)
        before = moments(psi)
        out = squeeze(psi, 0.5, 1.5, scale)  # r = 3
        after = moments(out)
        assert after.var_x == pytest.approx(9 * before.var_x, rel=1e-8)
        assert after.var_p == pytest.approx(before.var_p / 9, rel=1e-8)

    def test_inversion_sign_on_first_moments(self, scale):
        psi = make_gaussian(BIG, 0.8, -0.4, 1.0, scale)
        ms = moments(squeeze(psi, 1.0, 2.0, scale))
        assert ms.mean[0] == pytest.approx(-2 * 0.8, rel=1e-9)
        assert ms.mean[1] == pytest.approx(0.4 / 2, rel=1e-9)

    def test_physical_matches_ideal(self, scale, rng):
        psi = hg_superposition(BIG, scale, rng, max_order=4)
        ideal = squeeze(psi, 1.0, 1.7, scale, mode="ideal")
        physical = squeeze(psi, 1.0, 1.7, scale, mode="physical")
        assert l2_diff(ideal, physical) < 1e-7

    def test_compensate_inversion(self, scale):
        psi = make_gaussian(BIG, 0.8, 0.0, 1.0, scale)
        out = squeeze(psi, 1.0, 2.0, scale, compensate_inversion=True)
        assert moments(out).mean[0] == pytest.approx(+1.6, rel=1e-9)

    def test_output_overflow(self, grid, scale):
        psi = make_gaussian(grid, 0.0, 0.0, 1.0, scale)
        with pytest.raises(SupportOverflowError):
            squeeze(psi, 1.0, 4.0, scale)  # 1e-6 footprint ~5.3 -> 21 > 12

    def test_invalid_focal_lengths(self, grid, scale):
        psi = make_gaussian(grid, 0, 0, 1, scale)
        with pytest.raises(ValueError):
            squeeze(psi, -1.0, 1.0, scale)


class TestPauliZ:
    def test_zero_is_identity(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        assert l2_diff(pauli_z(psi, 0.0), psi) < 1e-15

    def test_momentum_displacement(self, grid, scale):
        psi = make_gaussian(grid, 0.0, 0.0, 1.0, scale)
        out = pauli_z(psi, 1.5)
        assert moments(out).mean[1] == pytest.approx(1.5, abs=1e-8)

    def test_position_marginal_unchanged_to_roundoff(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        out = pauli_z(psi, 0.9)
        assert np.max(np.abs(np.abs(out.amplitudes) - np.abs(psi.amplitudes))) < 1e-15

    def test_eigenvalue_phase_on_narrow_state(self, scale):
        grid = Grid1D(1024, 12.0)
        x0 = 20 * grid.spacing  # exact sample
        psi = make_gaussian(grid, x0, 0.0, 0.01, scale)
        s = 2.0
        out = pauli_z(psi, s)
        phase = np.angle(overlap(psi, out))
        assert phase == pytest.approx(s * x0, abs=1e-3)

    def test_nyquist_violation(self, grid, scale):
        psi = make_gaussian(grid, 0, 0, 1, scale)
        with pytest.raises(NyquistViolationError):
            pauli_z(psi, math.pi / grid.spacing)


class TestPauliX:
    def test_zero_is_identity(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        assert l2_diff(pauli_x(psi, 0.0), psi) < 1e-12

    def test_shift_moves_center_keeps_momentum(self, grid, scale):
        psi = make_gaussian(grid, 0.0, 0.7, 1.0, scale)
        out = pauli_x(psi, 2.0)
        ms = moments(out)
        assert ms.mean[0] == pytest.approx(2.0, abs=1e-9)
        assert ms.mean[1] == pytest.approx(0.7, abs=1e-9)
        p_in, rho_in = wavevector_marginal(psi)
        p_out, rho_out = wavevector_marginal(out)
        assert np.max(np.abs(rho_in - rho_out)) < 1e-12

    def test_composed_equals_direct(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng, max_order=6)
        a = pauli_x(psi, 1.3, method="direct")
        b = pauli_x(psi, 1.3, method="composed")
        assert l2_diff(a, b) < 1e-8

    def test_shift_theorem_pointwise_phase(self, grid, scale):
        t = 0.9
        psi = make_gaussian(grid, 0.0, 0.0, 1.0, scale)
        out = pauli_x(psi, t)
        v_in = to_conjugate_representation(psi)
        v_out = to_conjugate_representation(out)
        p = grid.conjugate_positions
        mask = np.abs(v_in.amplitudes) > 1e-6
        ratio = v_out.amplitudes[mask] / v_in.amplitudes[mask]
        assert np.max(np.abs(ratio - np.exp(-1j * t * p[mask]))) < 1e-10

    def test_support_overflow(self, grid, scale):
        psi = make_gaussian(grid, 4.0, 0.0, 1.0, scale)
        with pytest.raises(SupportOverflowError):
            pauli_x(psi, 6.0)


class TestPhasePoly:
    def test_n1_equals_pauli_z(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        assert l2_diff(phase_poly(psi, 1, 0.8), pauli_z(psi, 0.8)) < 1e-12

    def test_n2_equals_dimensionless_lens(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        f = 1.9
        alpha = -scale.fractional_focal / (2 * f)
        assert l2_diff(phase_poly(psi, 2, alpha), lens(psi, f, scale)) < 1e-12

    def test_cubic_gate_skews_momentum(self, grid, scale):
        alpha = 0.1
        psi = make_gaussian(grid, 0.0, 0.0, 1.0, scale)
        out = phase_poly(psi, 3, alpha)
        p, rho = wavevector_marginal(out)
        dp = grid.conjugate_spacing
        mean_p = float(np.sum(p * rho) * dp)
        third = float(np.sum((p - mean_p) ** 3 * rho) * dp)
        # Heisenberg map p -> p + a x^2 with a = 3 alpha.  Expanding the
        # cubed operator on the ground Gaussian (sigma_x^2 = 1/2) gives
        # <(dv)^3> = 8 a^3 sigma_x^6 - a/2; the linear term is the
        # [p, x^2] commutator contribution, absent classically.
        a = 3 * alpha
        sigma2 = 0.5
        expected = 8 * a**3 * sigma2**3 - a / 2
        assert third == pytest.approx(expected, rel=1e-4)
        assert np.sign(third) == np.sign(expected)

    def test_aliasing_warning(self, grid, scale):
        psi = make_gaussian(grid, 0.0, 0.0, 1.0, scale)
        with pytest.warns(NyquistWarning):
            phase_poly(psi, 3, 50.0)


class TestApplyProgram:
    def test_four_fouriers_identity(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        program = GateProgram((GateDescriptor.fourier(),) * 4, scale)
        assert l2_diff(apply_program(psi, program), psi) < 1e-9

    def test_three_thirds_of_pi_is_parity(self, grid, scale, rng):
        psi = hg_superposition(grid, scale, rng)
        program = GateProgram((GateDescriptor.frft(math.pi / 3),) * 3, scale)
        out = apply_program(psi, program)
        flipped = SampledWaveFunction1D(grid, parity_flip(psi.amplitudes), "position", scale)
        assert l2_diff(out, flipped) < 1e-6

    def test_squeeze_shift_commutation(self, scale, rng):
        # S X(t) = X(r t) S for the inversion-compensated squeezer
        psi = hg_superposition(BIG, scale, rng, max_order=3)
        r = 2.0
        a = apply_program(
            psi,
            GateProgram(
                (
                    GateDescriptor.squeeze(1.0, r, compensate_inversion=True),
                    GateDescriptor.pauli_x(1.0),
                ),
                scale,
            ),
        )
        b = apply_program(
            psi,
            GateProgram(
                (
                    GateDescriptor.pauli_x(1.0 / r),
                    GateDescriptor.squeeze(1.0, r, compensate_inversion=True),
                ),
                scale,
            ),
        )
        assert l2_diff(a, b) < 1e-8

    def test_error_annotated_with_step(self, grid, scale):
        psi = make_gaussian(grid, 0, 0, 1, scale)
        program = GateProgram(
            (
                GateDescriptor.fourier(),
                GateDescriptor.propagate(0.0),
                GateDescriptor.pauli_z(1e6),  # beyond the conjugate Nyquist bound
            ),
            scale,
        )
        with pytest.raises(NyquistViolationError, match="step 2"):
            apply_program(psi, program)

    def test_slm_mask_not_executable(self, grid, scale):
        psi = make_gaussian(grid, 0, 0, 1, scale)
        program = GateProgram((GateDescriptor.slm_mask("custom"),), scale)
        with pytest.raises(UnsupportedGateError, match="step 0"):
            apply_program(psi, program)

    def test_empty_program_is_noop(self, grid, scale):
        psi = make_gaussian(grid, 0, 0, 1, scale)
        assert apply_program(psi, GateProgram((), scale)) is psi

    def test_trace_records_steps(self, grid, scale):
        psi = make_gaussian(grid, 0, 0, 1, scale)
        program = GateProgram((GateDescriptor.pauli_x(0.5), GateDescriptor.pauli_z(0.3)), scale)
        out, steps = apply_program(psi, program, trace=True)
        assert [s.kind for s in steps] == ["pauli_x", "pauli_z"]
        assert steps[-1].moments.mean == pytest.approx([0.5, 0.3], abs=1e-8)


GAUSSIAN_GATES = [
    GateDescriptor.propagate(0.6),
    GateDescriptor.lens(1.4),
    GateDescriptor.lens(-2.0),
    GateDescriptor.fourier(),
    GateDescriptor.frft(0.9),
    GateDescriptor.frft(4.5),
    GateDescriptor.squeeze(1.0, 1.6),
    GateDescriptor.squeeze(1.5, 1.0, compensate_inversion=True),
    GateDescriptor.pauli_x(0.8),
    GateDescriptor.pauli_z(-1.1),
    GateDescriptor.phase_poly(1, 0.5),
    GateDescriptor.phase_poly(2, -0.25),
]


@pytest.mark.parametrize("gate", GAUSSIAN_GATES, ids=lambda g: f"{g.kind}")
class TestGateProperties:
    def test_unitarity(self, gate, scale, rng):
        from cvphoton.gates import apply_gate

        psi = make_gaussian(BIG, 0.3, -0.2, 1.1, scale)
        out = apply_gate(psi, gate, scale)
        assert abs(out.norm - 1.0) < 1e-9

    def test_symplectic_shadow(self, gate, scale, rng):
        from cvphoton.gates import apply_gate

        psi = make_gaussian(BIG, rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                            rng.uniform(0.9, 1.2), scale)
        rm = abcd_of_gate(gate, scale)
        predicted = predict_moments(rm, moments(psi))
        got = moments(apply_gate(psi, gate, scale))
        assert np.max(np.abs(got.mean - predicted.mean)) < 1e-6
        assert np.max(np.abs(got.covariance - predicted.covariance)) < 1e-6
