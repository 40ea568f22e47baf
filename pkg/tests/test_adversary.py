"""Interceptor models: knowledge confinement, disturbance, inference."""

import math
from collections import Counter

import numpy as np
import pytest

from qsdcsim.adversary import (
    EveObservation,
    EvePolicy,
    EveScenario,
    RESEND_RANDOM_LABEL,
    eve_backward_attack,
    eve_forward_attack,
    eve_infer_bit,
)
from qsdcsim.apparatus import ArmLabel, OutputPort, PhiSetting
from qsdcsim.optics import (
    PolarizationBasis,
    PolarizationLabel,
    ZERO_VECTOR,
    born_probabilities,
    prepare_polarization,
)
from qsdcsim.protocol import (
    BobPreparation,
    AliceEncoding,
    EventClass,
    ProtocolVariant,
    ThetaOption,
    execute_trial,
    run_session,
)

H, V, D, A = PolarizationLabel.H, PolarizationLabel.V, PolarizationLabel.D, PolarizationLabel.A
HV, DA = PolarizationBasis.HV, PolarizationBasis.DA


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(key=seed))


class TestScenarioFlags:
    def test_knowledge_flags(self):
        assert not EveScenario.BLIND.knows_polarization and not EveScenario.BLIND.knows_phi
        assert not EveScenario.PHI_AWARE.knows_polarization and EveScenario.PHI_AWARE.knows_phi
        assert EveScenario.POLARIZATION_AWARE.knows_polarization and not EveScenario.POLARIZATION_AWARE.knows_phi
        assert EveScenario.SUPER.knows_polarization and EveScenario.SUPER.knows_phi
        assert not EveScenario.NONE.attacks

    def test_policy_rejects_unknown_resend(self):
        with pytest.raises(ValueError):
            EvePolicy(scenario=EveScenario.BLIND, resend="telepathy")


class TestForwardAttack:
    def test_none_is_passthrough(self):
        s = prepare_polarization(D)
        out = eve_forward_attack(EvePolicy.for_scenario(EveScenario.NONE), s, ZERO_VECTOR, _rng())
        assert out == (s, ZERO_VECTOR, None)

    def test_phi_aware_skips_superposed(self):
        policy = EvePolicy.for_scenario(EveScenario.PHI_AWARE)
        half = prepare_polarization(D).scaled(1 / math.sqrt(2))
        s_r, s_l, obs = eve_forward_attack(policy, half, half, _rng(), phi_is_deterministic=False)
        assert obs is None and s_r == half and s_l == half

    def test_blind_collapses_superposition(self):
        """Which-arm detection localizes the photon; each arm half the time."""
        policy = EvePolicy.for_scenario(EveScenario.BLIND)
        half = prepare_polarization(H).scaled(1 / math.sqrt(2))
        rng = _rng(5)
        arms = Counter()
        for _ in range(4000):
            s_r, s_l, obs = eve_forward_attack(policy, half, half, rng)
            assert obs is not None and obs.segment == "forward"
            occupied = [s_r.norm_sq() > 0, s_l.norm_sq() > 0]
            assert occupied.count(True) == 1
            assert (obs.arm is ArmLabel.R) == occupied[0]
            arms[obs.arm] += 1
        sigma = math.sqrt(0.25 * 4000)
        assert abs(arms[ArmLabel.R] - 2000) < 5 * sigma

    def test_polarization_aware_never_disturbs_polarization(self):
        """Basis-aligned measurement of an eigenstate is invisible."""
        policy = EvePolicy.for_scenario(EveScenario.POLARIZATION_AWARE)
        rng = _rng(6)
        for label in PolarizationLabel:
            vec = prepare_polarization(label)
            for _ in range(32):
                s_r, s_l, obs = eve_forward_attack(policy, vec, ZERO_VECTOR, rng, prep=label)
                assert obs.outcome is label and obs.basis is label.basis
                assert s_r == vec and s_l == ZERO_VECTOR

    def test_blind_wrong_basis_resend_statistics(self):
        """Oracle: enumerate the outcome tree for prep D measured in HV.

        Outcomes H/V are equally likely and the resent eigenstate changes
        the downstream D/A statistics from certainty to a coin flip.
        """
        expected_da = {D: 0.5, A: 0.5}  # brute-force: 1/2*(1/2,1/2) + 1/2*(1/2,1/2)
        policy = EvePolicy.for_scenario(EveScenario.BLIND)
        rng = _rng(7)
        counts = Counter()
        n = 0
        while n < 4000:
            s_r, _, obs = eve_forward_attack(policy, prepare_polarization(D), ZERO_VECTOR, rng)
            if obs.basis is not HV:
                continue
            n += 1
            counts[obs.outcome] += 1
            probs = born_probabilities(s_r, DA)
            assert probs[D] == pytest.approx(0.5) and probs[A] == pytest.approx(0.5)
            for da_label, p in expected_da.items():
                assert probs[da_label] == pytest.approx(p)
        sigma = math.sqrt(0.25 * n)
        assert abs(counts[H] - n / 2) < 5 * sigma

    def test_random_label_resend_policy(self):
        policy = EvePolicy(scenario=EveScenario.BLIND, resend=RESEND_RANDOM_LABEL)
        rng = _rng(8)
        seen = set()
        for _ in range(200):
            s_r, _, _ = eve_forward_attack(policy, prepare_polarization(H), ZERO_VECTOR, rng)
            for label in PolarizationLabel:
                if abs(prepare_polarization(label).inner(s_r)) ** 2 > 1 - 1e-9:
                    seen.add(label)
        assert seen == set(PolarizationLabel)


class TestBackwardAttack:
    def test_none_is_passthrough(self):
        s = prepare_polarization(A)
        assert eve_backward_attack(EvePolicy.for_scenario(EveScenario.NONE), s, _rng()) == (s, None)

    def test_super_reads_flip_exactly(self):
        """Aligned measurement of the flipped return reproduces it."""
        policy = EvePolicy.for_scenario(EveScenario.SUPER)
        rng = _rng(9)
        out, obs = eve_backward_attack(policy, prepare_polarization(V), rng, arm=ArmLabel.R, prep=H)
        assert obs.outcome is V and obs.basis is HV
        assert out == prepare_polarization(V)

    def test_super_disturbs_probe_image(self):
        """HV measurement of |A> collapses it; D/A statistics go uniform."""
        policy = EvePolicy.for_scenario(EveScenario.SUPER)
        rng = _rng(10)
        outcomes = Counter()
        for _ in range(2000):
            out, obs = eve_backward_attack(policy, prepare_polarization(A), rng, prep=H)
            outcomes[obs.outcome] += 1
            assert out in (prepare_polarization(H), prepare_polarization(V))
        sigma = math.sqrt(0.25 * 2000)
        assert abs(outcomes[H] - 1000) < 5 * sigma


class TestInference:
    def _obs(self, segment, basis, outcome):
        return EveObservation(segment, ArmLabel.R, basis, outcome)

    def test_flip_reads_bit_one(self):
        fwd = self._obs("forward", HV, H)
        bwd = self._obs("backward", HV, V)
        assert eve_infer_bit(fwd, bwd, EveScenario.SUPER, HV) == 1

    def test_unchanged_reads_bit_zero(self):
        fwd = self._obs("forward", DA, D)
        bwd = self._obs("backward", DA, D)
        assert eve_infer_bit(fwd, bwd, EveScenario.SUPER, DA) == 0

    def test_requires_both_legs(self):
        fwd = self._obs("forward", HV, H)
        assert eve_infer_bit(fwd, None, EveScenario.SUPER, HV) is None
        assert eve_infer_bit(None, fwd, EveScenario.SUPER, HV) is None

    def test_mismatched_bases_unusable(self):
        fwd = self._obs("forward", HV, H)
        bwd = self._obs("backward", DA, D)
        assert eve_infer_bit(fwd, bwd, EveScenario.BLIND, HV) is None

    def test_blind_guess_must_match_preparation_basis(self):
        fwd = self._obs("forward", DA, D)
        bwd = self._obs("backward", DA, A)
        assert eve_infer_bit(fwd, bwd, EveScenario.BLIND, HV) is None
        assert eve_infer_bit(fwd, bwd, EveScenario.BLIND, DA) == 1


def _super_probe_detection_oracle():
    """Brute-force enumeration of the detection tree for one probe round.

    Configuration: preparation H, matched-arm probe plate, analyzer in the
    D/A basis. The return is exactly |A>. The interceptor measures H/V
    (probability 1/2 each), resends the eigenstate, and the analyzer
    projects it back onto D/A (probability 1/2 each); the round is flagged
    whenever the outcome is not the expected A.
    """
    p_detect = 0.0
    for _, p_mid in (("H", 0.5), ("V", 0.5)):
        for outcome, p_out in (("D", 0.5), ("A", 0.5)):
            if outcome != "A":
                p_detect += p_mid * p_out
    return p_detect


class TestSuperEveProtocolBehavior:
    def test_standard_variant_invisible(self):
        stats = run_session(ProtocolVariant.STANDARD, 0.5, EveScenario.SUPER, 50_000, 21)
        assert stats.eve_detections == 0
        p = 1 / 16
        sigma = math.sqrt(p * (1 - p) / stats.trials)
        assert abs(stats.eve_verified / stats.trials - p) < 5 * sigma

    def test_modified_variant_detected_only_by_probe_rounds(self):
        stats = run_session(ProtocolVariant.MODIFIED, 0.5, EveScenario.SUPER, 50_000, 22)
        assert stats.eve_detections > 0
        assert set(stats.detection_reasons) == {"probe-outcome-mismatch"}

    def test_probe_round_detection_probability_matches_enumeration(self):
        """Monte Carlo vs the enumerated tree (oracle value 1/2)."""
        oracle = _super_probe_detection_oracle()
        assert oracle == 0.5
        policy = EvePolicy.for_scenario(EveScenario.SUPER)
        prep = BobPreparation(H, PhiSetting.PHI_0, DA)
        enc = AliceEncoding(ArmLabel.R, ThetaOption.PROBE, None)
        rng = _rng(23)
        n, detected = 0, 0
        for _ in range(30_000):
            rec = execute_trial(ProtocolVariant.MODIFIED, 0.0, policy, prep, enc, rng)
            assert rec.port is OutputPort.TO_BOB_ANALYZER
            n += 1
            detected += rec.event is EventClass.EVE_DETECTED
        sigma = math.sqrt(oracle * (1 - oracle) / n)
        assert abs(detected / n - oracle) < 5 * sigma

    def test_probe_round_without_interceptor_never_flags(self):
        policy = EvePolicy.for_scenario(EveScenario.NONE)
        prep = BobPreparation(H, PhiSetting.PHI_0, DA)
        enc = AliceEncoding(ArmLabel.R, ThetaOption.PROBE, None)
        rng = _rng(24)
        for _ in range(2000):
            rec = execute_trial(ProtocolVariant.MODIFIED, 0.0, policy, prep, enc, rng)
            assert rec.event is EventClass.EVE_CHECK and not rec.eve_detected


class TestKnowledgeConfinement:
    def test_phi_aware_records_nothing_on_superposed_paths(self):
        seen = []
        run_session(
            ProtocolVariant.STANDARD, 0.5, EveScenario.PHI_AWARE, 5000, 25,
            phi_mode="sup-only", record_sink=seen.append,
        )
        assert all(len(rec.eve_observations) == 0 for rec in seen)

    def test_blind_attack_independent_of_settings(self):
        """A blind interceptor's basis choice cannot depend on the
        preparation: the basis split stays 50/50 within each prep label."""
        seen = []
        run_session(
            ProtocolVariant.STANDARD, 0.0, EveScenario.BLIND, 20_000, 26,
            record_sink=seen.append,
        )
        by_prep = {}
        for rec in seen:
            fwd = [o for o in rec.eve_observations if o.segment == "forward"]
            if not fwd:
                continue
            by_prep.setdefault(rec.bob_prep.polarization, Counter())[fwd[0].basis] += 1
        for label, counts in by_prep.items():
            n = counts[HV] + counts[DA]
            sigma = math.sqrt(0.25 * n)
            assert abs(counts[HV] - n / 2) < 5 * sigma, label
