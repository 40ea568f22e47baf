"""Intercept-resend eavesdropper models.

Eve sits on both arms between the tunable beam splitter and Alice's
detector tree, so she can tap the photon on its way in (forward leg) and,
for deterministic paths, on its way back to Bob (backward leg). The four
threat models differ only in which of Bob's private settings leak to her:

* ``BLIND``            — nothing leaks; she guesses bases uniformly.
* ``PHI_AWARE``        — the interferometer phase leaks; she leaves
                         superposition paths alone and attacks only
                         deterministic ones.
* ``POLARIZATION_AWARE`` — Bob's prepared polarization leaks; she aligns
                         every measurement with its basis, so she never
                         disturbs the polarization itself.
* ``SUPER``            — both leak; she attacks deterministic paths in
                         the preparation basis and can replay valid
                         analyzer outcomes, which defeats the standard
                         rules and motivates the probe-angle variant.

Knowledge confinement is structural: the attack functions receive the
phase or preparation only when the scenario's flags grant it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .apparatus import ArmLabel
from .optics import (
    JonesVector,
    PolarizationBasis,
    PolarizationLabel,
    SIGMA_Y_IMAGE,
    ZERO_VECTOR,
    measure_polarization,
    prepare_polarization,
)

_LABELS = (PolarizationLabel.H, PolarizationLabel.V, PolarizationLabel.D, PolarizationLabel.A)


class EveScenario(enum.Enum):
    NONE = "none"
    BLIND = "blind"
    PHI_AWARE = "phi-aware"
    POLARIZATION_AWARE = "pol-aware"
    SUPER = "super"

    @property
    def knows_polarization(self) -> bool:
        return self in (EveScenario.POLARIZATION_AWARE, EveScenario.SUPER)

    @property
    def knows_phi(self) -> bool:
        return self in (EveScenario.PHI_AWARE, EveScenario.SUPER)

    @property
    def attacks(self) -> bool:
        return self is not EveScenario.NONE

    def __str__(self) -> str:
        return self.value


RESEND_EIGENSTATE = "eigenstate"
RESEND_RANDOM_LABEL = "random-label"


@dataclass(frozen=True)
class EvePolicy:
    """Concrete attack rules for a scenario.

    ``resend`` selects what flies on after a measurement: the
    post-measurement eigenstate (standard intercept-resend, default) or a
    uniformly random protocol polarization (calibration alternative).
    Attack probability is fixed at one: every eligible leg is attacked.
    """

    scenario: EveScenario
    resend: str = RESEND_EIGENSTATE

    def __post_init__(self) -> None:
        if self.resend not in (RESEND_EIGENSTATE, RESEND_RANDOM_LABEL):
            raise ValueError(f"unknown resend rule {self.resend!r}")

    @classmethod
    def for_scenario(cls, scenario: EveScenario) -> "EvePolicy":
        return cls(scenario=scenario)


class EveObservation(NamedTuple):
    """One measurement Eve performed, as she recorded it."""

    segment: str  # "forward" | "backward"
    arm: Optional[ArmLabel]
    basis: PolarizationBasis
    outcome: PolarizationLabel


def _choose_basis(policy: EvePolicy, prep: Optional[PolarizationLabel], rng) -> PolarizationBasis:
    if policy.scenario.knows_polarization:
        assert prep is not None
        return prep.basis
    return PolarizationBasis.HV if rng.random() < 0.5 else PolarizationBasis.DA


def _resend_state(policy: EvePolicy, outcome: PolarizationLabel, rng) -> JonesVector:
    if policy.resend == RESEND_EIGENSTATE:
        return prepare_polarization(outcome)
    return prepare_polarization(_LABELS[min(int(rng.random() * 4.0), 3)])


def eve_forward_attack(
    policy: EvePolicy,
    state_right: JonesVector,
    state_left: JonesVector,
    rng,
    *,
    phi_is_deterministic: Optional[bool] = None,
    prep: Optional[PolarizationLabel] = None,
) -> tuple[JonesVector, JonesVector, Optional[EveObservation]]:
    """Intercept the Bob-to-Alice photon between beam splitter and arms.

    ``phi_is_deterministic`` is supplied only for phase-aware scenarios and
    ``prep`` only for polarization-aware ones. Finding the photon destroys
    a path superposition: which-arm detection collapses it onto one arm
    with the Born weights, after which the polarization is measured there
    and the resend flies on in the same arm.
    """
    if not policy.scenario.attacks:
        return state_right, state_left, None
    if policy.scenario.knows_phi:
        assert phi_is_deterministic is not None
        if not phi_is_deterministic:
            return state_right, state_left, None

    w_r = state_right.norm_sq()
    w_l = state_left.norm_sq()
    if w_r > 0.0 and w_l > 0.0:
        arm = ArmLabel.R if rng.random() < w_r / (w_r + w_l) else ArmLabel.L
    else:
        arm = ArmLabel.R if w_r > 0.0 else ArmLabel.L
    caught = state_right if arm is ArmLabel.R else state_left

    basis = _choose_basis(policy, prep, rng)
    outcome, _ = measure_polarization(caught, basis, rng.random())
    resent = _resend_state(policy, outcome, rng)
    obs = EveObservation("forward", arm, basis, outcome)
    if arm is ArmLabel.R:
        return resent, ZERO_VECTOR, obs
    return ZERO_VECTOR, resent, obs


def eve_backward_attack(
    policy: EvePolicy,
    returning: JonesVector,
    rng,
    *,
    arm: Optional[ArmLabel] = None,
    prep: Optional[PolarizationLabel] = None,
) -> tuple[JonesVector, Optional[EveObservation]]:
    """Intercept the Alice-to-Bob photon heading for the analyzer."""
    if not policy.scenario.attacks:
        return returning, None
    basis = _choose_basis(policy, prep, rng)
    outcome, _ = measure_polarization(returning, basis, rng.random())
    resent = _resend_state(policy, outcome, rng)
    return resent, EveObservation("backward", arm, basis, outcome)


def eve_infer_bit(
    forward: Optional[EveObservation],
    backward: Optional[EveObservation],
    scenario: EveScenario,
    prep_basis: PolarizationBasis,
) -> Optional[int]:
    """Bit Eve banks from one round, or None when her record is unusable.

    Requires both legs measured in one shared basis (flip versus no flip
    is only defined there). For the blind and phase-aware models the bit
    additionally counts only when that shared basis is the preparation
    basis — those scenarios cannot confirm their guesses, and this is the
    session-level accounting of that uncertainty. ``prep_basis`` is ground
    truth supplied by the bookkeeping, never by Eve.
    """
    if forward is None or backward is None:
        return None
    if forward.basis is not backward.basis:
        return None
    if not scenario.knows_polarization and forward.basis is not prep_basis:
        return None
    if backward.outcome is forward.outcome:
        return 0
    if backward.outcome is SIGMA_Y_IMAGE[forward.outcome]:
        return 1
    return None
