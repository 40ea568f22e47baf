"""Polarization algebra: wave-plate matrices, preparations, Born rule."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsdcsim.optics import (
    IDENTITY,
    JonesVector,
    PolarizationBasis,
    PolarizationLabel,
    SIGMA_Y,
    SIGMA_Z,
    SIGMA_Y_IMAGE,
    apply_unitary,
    born_probabilities,
    equal_up_to_global_phase,
    is_unitary,
    measure_polarization,
    message_unitary,
    nearest_label,
    prepare_polarization,
    qwp_unitary,
)

H = PolarizationLabel.H
V = PolarizationLabel.V
D = PolarizationLabel.D
A = PolarizationLabel.A


class TestQwpUnitary:
    def test_theta_zero(self):
        expected = (1 / math.sqrt(2)) * np.array([[1 - 1j, 0], [0, 1 + 1j]])
        assert np.allclose(qwp_unitary(0.0), expected, atol=1e-12)

    def test_theta_quarter_pi(self):
        expected = (1 / math.sqrt(2)) * np.array([[1, -1j], [-1j, 1]])
        assert np.allclose(qwp_unitary(math.pi / 4), expected, atol=1e-12)

    @pytest.mark.parametrize("theta", np.linspace(0.0, 2 * math.pi, 100, endpoint=False))
    def test_unitary_on_grid(self, theta):
        assert is_unitary(qwp_unitary(theta), tol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            qwp_unitary(float("nan"))
        with pytest.raises(ValueError):
            qwp_unitary(float("inf"))

    @given(st.floats(-50.0, 50.0))
    @settings(max_examples=50, deadline=None)
    def test_unitary_for_any_angle(self, theta):
        assert is_unitary(qwp_unitary(theta), tol=1e-12)


class TestMessageUnitary:
    @pytest.mark.parametrize("theta", np.linspace(0.0, 2 * math.pi, 100, endpoint=False))
    def test_matches_plate_mirror_plate_composition(self, theta):
        """The closed form must equal QWP(-θ)·σ_z·QWP(θ) entrywise."""
        composed = qwp_unitary(-theta) @ SIGMA_Z @ qwp_unitary(theta)
        assert np.allclose(message_unitary(theta), composed, atol=1e-12)

    def test_half_pi_is_identity_up_to_phase(self):
        u = message_unitary(math.pi / 2)
        assert equal_up_to_global_phase(u, IDENTITY)
        # The retained global phase is exactly +i.
        assert np.allclose(u, 1j * IDENTITY, atol=1e-12)

    def test_quarter_pi_is_sigma_y_exactly(self):
        assert np.allclose(message_unitary(math.pi / 4), SIGMA_Y, atol=1e-12)

    def test_eighth_pi_probe_matrix(self):
        expected = (-1j / math.sqrt(2)) * np.array([[1, 1], [-1, 1]])
        assert np.allclose(message_unitary(math.pi / 8), expected, atol=1e-12)

    @pytest.mark.parametrize("theta", np.linspace(0.0, 2 * math.pi, 100, endpoint=False))
    def test_unitary_on_grid(self, theta):
        assert is_unitary(message_unitary(theta), tol=1e-12)


class TestPreparations:
    def test_computational_states(self):
        assert prepare_polarization(H) == JonesVector(1.0 + 0j, 0j)
        assert prepare_polarization(V) == JonesVector(0j, 1.0 + 0j)

    def test_diagonal_states(self):
        s = 1 / math.sqrt(2)
        d = prepare_polarization(D)
        a = prepare_polarization(A)
        assert d.amp_h == pytest.approx(s) and d.amp_v == pytest.approx(s)
        assert a.amp_h == pytest.approx(s) and a.amp_v == pytest.approx(-s)

    def test_normalization_and_orthogonality(self):
        for label in PolarizationLabel:
            assert prepare_polarization(label).is_normalized()
        assert prepare_polarization(H).inner(prepare_polarization(V)) == 0
        assert prepare_polarization(D).inner(prepare_polarization(A)) == pytest.approx(0)
        overlap = abs(prepare_polarization(H).inner(prepare_polarization(D))) ** 2
        assert overlap == pytest.approx(0.5)

    def test_sigma_y_images_match_matrix(self):
        """The label flip table is the matrix action of σ_y, up to phase."""
        for label in PolarizationLabel:
            image = apply_unitary(SIGMA_Y, prepare_polarization(label))
            assert nearest_label(image) is SIGMA_Y_IMAGE[label]

    def test_basis_attribution(self):
        assert H.basis is PolarizationBasis.HV and V.basis is PolarizationBasis.HV
        assert D.basis is PolarizationBasis.DA and A.basis is PolarizationBasis.DA
        assert PolarizationBasis.HV.other is PolarizationBasis.DA


class TestBornRule:
    def test_eigenstate(self):
        probs = born_probabilities(prepare_polarization(H), PolarizationBasis.HV)
        assert probs[H] == pytest.approx(1.0) and probs[V] == pytest.approx(0.0)

    def test_unbiased_basis(self):
        probs = born_probabilities(prepare_polarization(H), PolarizationBasis.DA)
        assert probs[D] == pytest.approx(0.5) and probs[A] == pytest.approx(0.5)

    def test_probe_image_of_h_is_antidiagonal(self):
        # Oracle: matrix-vector product, computed here independently.
        m = message_unitary(math.pi / 8)
        state = apply_unitary(m, prepare_polarization(H))
        expected_a = abs(np.vdot([1 / math.sqrt(2), -1 / math.sqrt(2)], [state.amp_h, state.amp_v])) ** 2
        assert expected_a == pytest.approx(1.0)
        probs = born_probabilities(state, PolarizationBasis.DA)
        assert probs[A] == pytest.approx(1.0, abs=1e-12)
        assert probs[D] == pytest.approx(0.0, abs=1e-12)

    def test_total_probability_conservation(self):
        for label in PolarizationLabel:
            state = prepare_polarization(label)
            for basis in PolarizationBasis:
                assert sum(born_probabilities(state, basis).values()) == pytest.approx(1.0, abs=1e-12)

    def test_subnormalized_state_sums_to_norm(self):
        state = prepare_polarization(D).scaled(0.5)
        total = sum(born_probabilities(state, PolarizationBasis.HV).values())
        assert total == pytest.approx(0.25, abs=1e-12)

    def test_zero_state_rejected(self):
        with pytest.raises(ValueError):
            born_probabilities(JonesVector(0j, 0j), PolarizationBasis.HV)

    def test_measurement_collapse(self):
        outcome, post = measure_polarization(prepare_polarization(D), PolarizationBasis.DA, 0.3)
        assert outcome is D and post == prepare_polarization(D)
        outcome, post = measure_polarization(prepare_polarization(D), PolarizationBasis.HV, 0.7)
        assert outcome is V and post == prepare_polarization(V)


class TestGlobalPhase:
    def test_identity_vs_scaled_identity(self):
        assert equal_up_to_global_phase(IDENTITY, 1j * IDENTITY)

    def test_sigma_y_vs_flip_operation(self):
        assert equal_up_to_global_phase(SIGMA_Y, message_unitary(math.pi / 4))

    def test_distinct_operations(self):
        assert not equal_up_to_global_phase(IDENTITY, SIGMA_Y)

    @given(st.floats(0.0, 2 * math.pi))
    @settings(max_examples=50, deadline=None)
    def test_phase_rotation_invariance(self, alpha):
        u = qwp_unitary(0.37)
        assert equal_up_to_global_phase(u, np.exp(1j * alpha) * u)


class TestNearestLabel:
    def test_exact_labels(self):
        for label in PolarizationLabel:
            assert nearest_label(prepare_polarization(label)) is label

    def test_rejects_intermediate_states(self):
        oblique = JonesVector(math.cos(0.3), math.sin(0.3))
        with pytest.raises(ValueError):
            nearest_label(oblique)
