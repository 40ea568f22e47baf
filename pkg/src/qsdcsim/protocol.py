"""Protocol rounds between the two parties, with optional interception.

One trial: Bob prepares a random polarization and phase setting and sends
the photon; Alice has armed one wave-plate module with her message
operation (identity for bit 0, bit-flip for bit 1, or the probe angle in
the modified variant); the photon either clicks one of Alice's detectors
or returns to Bob. The public-channel exchange then classifies the round
as message decoding, an eavesdropper check, or a discard, and runs the
consistency checks that expose an interceptor:

* a click in a detector the phase setting cannot reach (invalid arm);
* a detector polarization inconsistent with an H/V preparation;
* an analyzer outcome inconsistent with an unchanged return on a
  mismatched arm, or with the probe image in the modified variant.

With ideal devices and no interceptor every check passes by
construction: the simulator never raises a false alarm.

Sessions aggregate many trials. Reproducibility is counter-based: trial
``i`` draws its randomness from a Philox stream keyed by
``(master_seed, stream_tag, i // BLOCK)`` at row ``i % BLOCK``, so
statistics are identical for any execution order or worker count.

The per-trial engine exploits that every reachable photon state factors
into (path amplitudes) x (one shared polarization): the port is sampled
from scalar path amplitudes and only the sampled branch's polarization is
ever computed. Tests pin this fast path to the general amplitude map in
:mod:`qsdcsim.apparatus`.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import analytics
from .adversary import (
    EveObservation,
    EvePolicy,
    EveScenario,
    eve_backward_attack,
    eve_forward_attack,
    eve_infer_bit,
)
from .apparatus import (
    ArmLabel,
    OutputPort,
    PhiSetting,
    SUPERPOSED_COMBINER_PORT,
    VALID_PORTS,
    tbs_split,
    validate_reflectivity,
)
from .optics import (
    JonesVector,
    PolarizationBasis,
    PolarizationLabel,
    SIGMA_Y_IMAGE,
    ZERO_VECTOR,
    apply_unitary,
    message_unitary,
    nearest_label,
    prepare_polarization,
)

SQRT_HALF = 1.0 / math.sqrt(2.0)


class ThetaOption(enum.Enum):
    """Alice's wave-plate settings and the operations they realize."""

    IDENTITY = "pi/2"   # identity (up to phase): message bit 0
    FLIP = "pi/4"       # sigma_y: message bit 1
    PROBE = "pi/8"      # basis-toggling probe of the modified variant

    def __init__(self, name: str) -> None:
        self.radians = {"pi/2": math.pi / 2, "pi/4": math.pi / 4, "pi/8": math.pi / 8}[name]
        self.message_bit = {"pi/2": 0, "pi/4": 1, "pi/8": None}[name]

    def __str__(self) -> str:
        return self.value


class ProtocolVariant(enum.Enum):
    STANDARD = "standard"
    MODIFIED = "modified"
    SCHEDULE_S1 = "schedule-s1"  # r pinned to 1, superposition paths only
    SCHEDULE_S2 = "schedule-s2"  # r pinned to 0, deterministic paths, probe angle only

    @property
    def analyzer_is_random(self) -> bool:
        return self is not ProtocolVariant.STANDARD

    @property
    def uses_probe_rules(self) -> bool:
        return self is not ProtocolVariant.STANDARD

    def __str__(self) -> str:
        return self.value


class EventClass(enum.Enum):
    MESSAGE_DECODED = "MessageDecoded"
    EVE_CHECK = "EveCheck"
    DISCARDED = "Discarded"
    EVE_DETECTED = "EveDetected"

    def __str__(self) -> str:
        return self.value


# Detection reasons (stable transcript/report strings).
REASON_INVALID_ARM = "invalid-arm"
REASON_DETECTOR_POLARIZATION = "detector-polarization-mismatch"
REASON_ANALYZER_POLARIZATION = "analyzer-polarization-mismatch"
REASON_PROBE_OUTCOME = "probe-outcome-mismatch"


class BobPreparation(NamedTuple):
    polarization: PolarizationLabel
    phi: PhiSetting
    analyzer_basis: PolarizationBasis


class AliceEncoding(NamedTuple):
    active_arm: ArmLabel
    theta: ThetaOption
    message_bit: Optional[int]


class Announcement(NamedTuple):
    """One public-channel statement; never carries φ, the preparation, or a bit."""

    origin: str  # "alice" | "bob"
    kind: str    # "detector-click" | "photon-returned" | "active-arm" | "theta-class" | "eve-alert"
    value: Optional[object] = None


class TrialRecord(NamedTuple):
    index: int
    bob_prep: BobPreparation
    alice_enc: AliceEncoding
    port: OutputPort
    detected_polarization: Optional[PolarizationLabel]
    presumed_polarization: Optional[PolarizationLabel]
    announcements: tuple
    event: EventClass
    eve_detected: bool
    eve_reason: Optional[str]
    decoded_bit: Optional[int]
    bit_readable: bool
    eve_observations: tuple
    eve_inferred_bit: Optional[int]

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "prep": str(self.bob_prep.polarization),
            "phi": str(self.bob_prep.phi),
            "analyzer_basis": str(self.bob_prep.analyzer_basis),
            "active_arm": str(self.alice_enc.active_arm),
            "theta": str(self.alice_enc.theta),
            "message_bit": self.alice_enc.message_bit,
            "port": str(self.port),
            "detected_polarization": None if self.detected_polarization is None else str(self.detected_polarization),
            "presumed_polarization": None if self.presumed_polarization is None else str(self.presumed_polarization),
            "announcements": [
                {"origin": a.origin, "kind": a.kind, "value": a.value} for a in self.announcements
            ],
            "event": str(self.event),
            "eve_detected": self.eve_detected,
            "eve_reason": self.eve_reason,
            "decoded_bit": self.decoded_bit,
            "bit_readable": self.bit_readable,
        }


# ---------------------------------------------------------------------------
# Statistics

_PHI_ORDER = (PhiSetting.PHI_0, PhiSetting.PHI_HALF_PI, PhiSetting.PHI_PI, PhiSetting.PHI_3HALF_PI)
_PORT_ORDER = (
    OutputPort.TO_BOB_ANALYZER,
    OutputPort.TO_BOB_DISCARD,
    OutputPort.DA1,
    OutputPort.DA2,
    OutputPort.DA3,
    OutputPort.DA4,
)


@dataclass
class SessionStatistics:
    """Aggregated counts over a session; merging is commutative."""

    trials: int = 0
    events: dict = None
    phi_port: dict = None
    detection_reasons: dict = None
    decoded_bits: int = 0
    decode_errors: int = 0
    unreadable_message_rounds: int = 0
    eve_inferred: int = 0
    eve_success: int = 0
    eve_verified: int = 0

    def __post_init__(self) -> None:
        if self.events is None:
            self.events = {}
        if self.phi_port is None:
            self.phi_port = {}
        if self.detection_reasons is None:
            self.detection_reasons = {}

    @property
    def eve_detections(self) -> int:
        return self.events.get(EventClass.EVE_DETECTED, 0)

    def event_count(self, event: EventClass) -> int:
        return self.events.get(event, 0)

    def frequency(self, event: EventClass) -> float:
        return self.event_count(event) / self.trials if self.trials else 0.0

    def merge(self, other: "SessionStatistics") -> "SessionStatistics":
        out = SessionStatistics()
        for src in (self, other):
            out.trials += src.trials
            out.decoded_bits += src.decoded_bits
            out.decode_errors += src.decode_errors
            out.unreadable_message_rounds += src.unreadable_message_rounds
            out.eve_inferred += src.eve_inferred
            out.eve_success += src.eve_success
            out.eve_verified += src.eve_verified
            for k, v in src.events.items():
                out.events[k] = out.events.get(k, 0) + v
            for k, v in src.phi_port.items():
                out.phi_port[k] = out.phi_port.get(k, 0) + v
            for k, v in src.detection_reasons.items():
                out.detection_reasons[k] = out.detection_reasons.get(k, 0) + v
        return out

    def to_dict(self) -> dict:
        phi_port: dict[str, dict[str, int]] = {}
        for phi in _PHI_ORDER:
            row = {}
            for port in _PORT_ORDER:
                n = self.phi_port.get((phi, port), 0)
                if n:
                    row[str(port)] = n
            if row:
                phi_port[f"phi={phi}"] = row
        return {
            "trials": self.trials,
            "events": {str(ev): self.events.get(ev, 0) for ev in EventClass},
            "phi_port_counts": phi_port,
            "detection_reasons": {k: self.detection_reasons[k] for k in sorted(self.detection_reasons)},
            "decoded_bits": self.decoded_bits,
            "decode_errors": self.decode_errors,
            "unreadable_message_rounds": self.unreadable_message_rounds,
            "eve": {
                "inferred_bits": self.eve_inferred,
                "successful_eavesdrops": self.eve_success,
                "verified_bits": self.eve_verified,
            },
        }


# ---------------------------------------------------------------------------
# Classification and checks

_PROBE_MATRIX = message_unitary(ThetaOption.PROBE.radians)
#: Label image of each preparation under the probe operation (H→A, V→D, D→H, A→V).
PROBE_IMAGE = {
    label: nearest_label(apply_unitary(_PROBE_MATRIX, prepare_polarization(label)))
    for label in PolarizationLabel
}

#: Which original label Alice presumes, given the module's wave-plate
#: setting and her measured H/V outcome (her modules invert the arm
#: operation before labeling).
_PRESUME = {}
for _theta in ThetaOption:
    _u_dag = message_unitary(_theta.radians).conj().T
    for _out in (PolarizationLabel.H, PolarizationLabel.V):
        _PRESUME[(_theta, _out)] = nearest_label(apply_unitary(_u_dag, prepare_polarization(_out)))

_MSG_MATRIX = {t: tuple(map(tuple, message_unitary(t.radians).tolist())) for t in ThetaOption}

#: Superposed-φ arm detectors: one is an eavesdropper check, the other a discard.
_SUP_ARM_CHECK_PORT = {
    PhiSetting.PHI_HALF_PI: OutputPort.DA1,
    PhiSetting.PHI_3HALF_PI: OutputPort.DA2,
}


def classify_event(
    variant: ProtocolVariant,
    phi: PhiSetting,
    port: OutputPort,
    arm_matched: Optional[bool],
    theta: ThetaOption,
) -> EventClass:
    """Event class of a resolved round, before any check results.

    A port the phase setting cannot reach classifies directly as
    EveDetected (invalid-arm rule). Deterministic paths: the analyzer is
    message decoding on a matched arm (in probe rounds of the modified
    variant it is a check instead) and an unchanged-polarization check
    otherwise; D_A3 checks while D_A4 discards. Superposition paths: the
    populated combiner detector checks, one arm detector checks and the
    other discards, and the returning photon is a discard.
    """
    if port not in VALID_PORTS[phi]:
        return EventClass.EVE_DETECTED
    if phi.is_deterministic:
        if port is OutputPort.TO_BOB_ANALYZER:
            if not arm_matched:
                return EventClass.EVE_CHECK
            if variant.uses_probe_rules and theta is ThetaOption.PROBE:
                return EventClass.EVE_CHECK
            return EventClass.MESSAGE_DECODED
        if port is OutputPort.DA4:
            return EventClass.DISCARDED
        return EventClass.EVE_CHECK  # DA1/DA2 on the valid arm, or DA3
    if port is OutputPort.TO_BOB_DISCARD:
        return EventClass.DISCARDED
    if port is SUPERPOSED_COMBINER_PORT[phi] or port is _SUP_ARM_CHECK_PORT[phi]:
        return EventClass.EVE_CHECK
    return EventClass.DISCARDED


def check_eve_detection(
    variant: ProtocolVariant,
    prep: PolarizationLabel,
    phi: PhiSetting,
    port: OutputPort,
    *,
    detector_outcome: Optional[PolarizationLabel] = None,
    presumed: Optional[PolarizationLabel] = None,
    arm_matched: Optional[bool] = None,
    theta: Optional[ThetaOption] = None,
    analyzer_basis: Optional[PolarizationBasis] = None,
    analyzer_outcome: Optional[PolarizationLabel] = None,
) -> tuple[bool, Optional[str]]:
    """All consistency checks for one resolved round.

    Comparisons only fire when the reported label lives in the same basis
    as the reference value (an H/V module reading a diagonal photon is
    uniform noise, not evidence). With no interceptor every reachable
    configuration passes, so there are no false alarms.
    """
    if port not in VALID_PORTS[phi]:
        return True, REASON_INVALID_ARM

    if port in (OutputPort.DA3, OutputPort.DA4):
        if detector_outcome is not None and detector_outcome.basis is prep.basis and detector_outcome is not prep:
            return True, REASON_DETECTOR_POLARIZATION
    elif port in (OutputPort.DA1, OutputPort.DA2):
        if presumed is not None and presumed.basis is prep.basis and presumed is not prep:
            return True, REASON_DETECTOR_POLARIZATION
    elif port is OutputPort.TO_BOB_ANALYZER:
        if analyzer_basis is None or analyzer_outcome is None:
            raise ValueError("analyzer checks need the analyzer basis and outcome")
        if not arm_matched:
            # The traversed arm held an identity plate: the polarization
            # must come back unchanged.
            if analyzer_basis is prep.basis and analyzer_outcome is not prep:
                return True, REASON_ANALYZER_POLARIZATION
        elif variant.uses_probe_rules and theta is ThetaOption.PROBE:
            expected = PROBE_IMAGE[prep]
            if analyzer_basis is expected.basis and analyzer_outcome is not expected:
                return True, REASON_PROBE_OUTCOME
    return False, None


def decode_message(prep: PolarizationLabel, analyzer_outcome: PolarizationLabel) -> int:
    """Bit carried by a matched-arm return: 0 unchanged, 1 flipped."""
    if analyzer_outcome is prep:
        return 0
    if analyzer_outcome is SIGMA_Y_IMAGE[prep]:
        return 1
    raise ValueError(
        f"analyzer outcome {analyzer_outcome} is in neither bit image of preparation {prep}"
    )


# ---------------------------------------------------------------------------
# Trial execution

PHI_MODES = ("uniform", "det-only", "sup-only")

_PHI_TABLE = {
    "uniform": (
        (0.25, PhiSetting.PHI_0),
        (0.50, PhiSetting.PHI_HALF_PI),
        (0.75, PhiSetting.PHI_PI),
        (1.01, PhiSetting.PHI_3HALF_PI),
    ),
    "det-only": ((0.5, PhiSetting.PHI_0), (1.01, PhiSetting.PHI_PI)),
    "sup-only": ((0.5, PhiSetting.PHI_HALF_PI), (1.01, PhiSetting.PHI_3HALF_PI)),
    # Single-setting modes, used by the per-φ table verification.
    "0": ((1.01, PhiSetting.PHI_0),),
    "pi/2": ((1.01, PhiSetting.PHI_HALF_PI),),
    "pi": ((1.01, PhiSetting.PHI_PI),),
    "3pi/2": ((1.01, PhiSetting.PHI_3HALF_PI),),
}

PHI_WEIGHTS_EXACT = {
    "uniform": analytics.UNIFORM_PHI_WEIGHTS,
    "det-only": analytics.DETERMINISTIC_ONLY_WEIGHTS,
    "sup-only": analytics.SUPERPOSED_ONLY_WEIGHTS,
    "0": {PhiSetting.PHI_0: Fraction(1)},
    "pi/2": {PhiSetting.PHI_HALF_PI: Fraction(1)},
    "pi": {PhiSetting.PHI_PI: Fraction(1)},
    "3pi/2": {PhiSetting.PHI_3HALF_PI: Fraction(1)},
}

_LABELS4 = (PolarizationLabel.H, PolarizationLabel.V, PolarizationLabel.D, PolarizationLabel.A)

_HV = PolarizationBasis.HV
_DA = PolarizationBasis.DA
_H = PolarizationLabel.H
_V = PolarizationLabel.V
_D = PolarizationLabel.D
_A = PolarizationLabel.A


def draw_bob_preparation(variant: ProtocolVariant, rng, phi_mode: str = "uniform") -> BobPreparation:
    pol = _LABELS4[min(int(rng.random() * 4.0), 3)]
    u = rng.random()
    for threshold, phi in _PHI_TABLE[phi_mode]:
        if u < threshold:
            break
    if variant.analyzer_is_random:
        basis = _HV if rng.random() < 0.5 else _DA
    else:
        basis = pol.basis
    return BobPreparation(pol, phi, basis)


def draw_alice_encoding(
    variant: ProtocolVariant, rng, message_bit: Optional[int] = None
) -> AliceEncoding:
    arm = ArmLabel.R if rng.random() < 0.5 else ArmLabel.L
    if variant in (ProtocolVariant.SCHEDULE_S1, ProtocolVariant.SCHEDULE_S2):
        theta = ThetaOption.PROBE
    elif variant is ProtocolVariant.MODIFIED:
        u = rng.random()
        theta = (
            ThetaOption.IDENTITY if u < 1.0 / 3.0 else ThetaOption.FLIP if u < 2.0 / 3.0 else ThetaOption.PROBE
        )
    else:
        bit = message_bit if message_bit is not None else (1 if rng.random() < 0.5 else 0)
        theta = ThetaOption.FLIP if bit else ThetaOption.IDENTITY
    return AliceEncoding(arm, theta, theta.message_bit)


def _born_pick(h: complex, v: complex, basis: PolarizationBasis, u: float) -> PolarizationLabel:
    """Measure a unit Jones pair in ``basis`` using one uniform draw."""
    if basis is _HV:
        p = (h * h.conjugate()).real
        return _H if u < p else _V
    s = (h + v) * SQRT_HALF
    p = (s * s.conjugate()).real
    return _D if u < p else _A


def execute_trial(
    variant: ProtocolVariant,
    r: float,
    policy: EvePolicy,
    bob_prep: BobPreparation,
    alice_enc: AliceEncoding,
    rng,
    index: int = 0,
) -> TrialRecord:
    """Run one round with the private settings already drawn.

    Every reachable photon state is a product of path amplitudes and one
    polarization: the interceptor either leaves the split untouched or
    collapses it onto a single arm with a fresh polarization. The port is
    therefore sampled from scalar path amplitudes and only the sampled
    branch's polarization is computed.
    """
    prep = bob_prep.polarization
    phi = bob_prep.phi
    scenario = policy.scenario

    theta_r = alice_enc.theta if alice_enc.active_arm is ArmLabel.R else ThetaOption.IDENTITY
    theta_l = alice_enc.theta if alice_enc.active_arm is ArmLabel.L else ThetaOption.IDENTITY

    pol = prepare_polarization(prep)
    c_r, c_l = tbs_split(phi)

    observations: tuple = ()
    fwd_obs = None
    if scenario.attacks:
        state_r = pol.scaled(c_r) if c_r != 0 else ZERO_VECTOR
        state_l = pol.scaled(c_l) if c_l != 0 else ZERO_VECTOR
        new_r, new_l, fwd_obs = eve_forward_attack(
            policy,
            state_r,
            state_l,
            rng,
            phi_is_deterministic=phi.is_deterministic if scenario.knows_phi else None,
            prep=prep if scenario.knows_polarization else None,
        )
        if fwd_obs is not None:
            # Collapsed: unit path amplitude in the found arm, resent polarization.
            observations = (fwd_obs,)
            if fwd_obs.arm is ArmLabel.R:
                c_r, c_l, pol = 1.0, 0.0, new_r
            else:
                c_r, c_l, pol = 0.0, 1.0, new_l

    # Scalar port amplitudes; the polarization factor is attached after sampling.
    t = 1.0 - r
    k_arm = math.sqrt(r * t)
    k3 = math.sqrt(r * 0.5)
    w_da1 = (r * t) * abs(c_r) ** 2
    w_da2 = (r * t) * abs(c_l) ** 2
    a3 = c_r - c_l
    a4 = c_r + c_l
    w_da3 = (r * 0.5) * (a3 * a3.conjugate()).real
    w_da4 = (r * 0.5) * (a4 * a4.conjugate()).real

    # Doubly transmitted weight: back to Bob. Deterministic φ routes its own
    # arm into the analyzer; anything else leaves the interferometer.
    if phi.is_deterministic:
        c_main = c_r if phi is PhiSetting.PHI_0 else c_l
        c_stray = c_l if phi is PhiSetting.PHI_0 else c_r
        w_analyzer = (t * t) * abs(c_main) ** 2
        w_stray = (t * t) * abs(c_stray) ** 2
    else:
        w_analyzer = 0.0
        w_stray = (t * t) * (abs(c_r) ** 2 + abs(c_l) ** 2)

    u = rng.random()
    port = None
    acc = w_da1
    if u < acc:
        port = OutputPort.DA1
    else:
        acc += w_da2
        if u < acc:
            port = OutputPort.DA2
        else:
            acc += w_da3
            if u < acc:
                port = OutputPort.DA3
            else:
                acc += w_da4
                if u < acc:
                    port = OutputPort.DA4
                else:
                    acc += w_analyzer
                    if u < acc:
                        port = OutputPort.TO_BOB_ANALYZER
                    elif u < acc + w_stray:
                        port = OutputPort.TO_BOB_DISCARD
    if port is None:
        # Floating-point dust at u ≈ total weight: take the heaviest port.
        port = max(
            (
                (w_da1, 2, OutputPort.DA1),
                (w_da2, 3, OutputPort.DA2),
                (w_da3, 4, OutputPort.DA3),
                (w_da4, 5, OutputPort.DA4),
                (w_analyzer, 0, OutputPort.TO_BOB_ANALYZER),
                (w_stray, 1, OutputPort.TO_BOB_DISCARD),
            )
        )[2]

    announcements: list = []
    detected: Optional[PolarizationLabel] = None
    presumed: Optional[PolarizationLabel] = None
    decoded: Optional[int] = None
    readable = False
    arm_matched: Optional[bool] = None
    bwd_obs = None

    if port is OutputPort.DA1 or port is OutputPort.DA2:
        module_theta = theta_r if port is OutputPort.DA1 else theta_l
        m = _MSG_MATRIX[module_theta]
        h = m[0][0] * pol.amp_h + m[0][1] * pol.amp_v
        v = m[1][0] * pol.amp_h + m[1][1] * pol.amp_v
        detected = _born_pick(h, v, _HV, rng.random())
        presumed = _PRESUME[(module_theta, detected)]
        announcements.append(
            Announcement("alice", "detector-click", (port.detector_number, str(presumed)))
        )
        event = classify_event(variant, phi, port, None, alice_enc.theta)
        hit, reason = check_eve_detection(
            variant, prep, phi, port, detector_outcome=detected, presumed=presumed
        )
    elif port is OutputPort.DA3 or port is OutputPort.DA4:
        detected = _born_pick(pol.amp_h, pol.amp_v, _HV, rng.random())
        announcements.append(
            Announcement("alice", "detector-click", (port.detector_number, str(detected)))
        )
        event = classify_event(variant, phi, port, None, alice_enc.theta)
        hit, reason = check_eve_detection(variant, prep, phi, port, detector_outcome=detected)
    elif port is OutputPort.TO_BOB_ANALYZER:
        arm = phi.deterministic_arm
        arm_matched = alice_enc.active_arm is arm
        m = _MSG_MATRIX[theta_r if arm is ArmLabel.R else theta_l]
        ret = JonesVector(
            m[0][0] * pol.amp_h + m[0][1] * pol.amp_v,
            m[1][0] * pol.amp_h + m[1][1] * pol.amp_v,
        )
        announcements.append(Announcement("bob", "photon-returned"))
        announcements.append(Announcement("alice", "active-arm", str(alice_enc.active_arm)))
        if variant.uses_probe_rules:
            theta_class = "probe" if alice_enc.theta is ThetaOption.PROBE else "message"
            announcements.append(Announcement("alice", "theta-class", theta_class))
        if scenario.attacks:
            ret, bwd_obs = eve_backward_attack(
                policy,
                ret,
                rng,
                arm=arm,
                prep=prep if scenario.knows_polarization else None,
            )
            if bwd_obs is not None:
                observations = observations + (bwd_obs,)
        detected = _born_pick(ret.amp_h, ret.amp_v, bob_prep.analyzer_basis, rng.random())
        event = classify_event(variant, phi, port, arm_matched, alice_enc.theta)
        hit, reason = check_eve_detection(
            variant,
            prep,
            phi,
            port,
            arm_matched=arm_matched,
            theta=alice_enc.theta,
            analyzer_basis=bob_prep.analyzer_basis,
            analyzer_outcome=detected,
        )
        if event is EventClass.MESSAGE_DECODED and not hit:
            readable = bob_prep.analyzer_basis is prep.basis
            if readable:
                decoded = decode_message(prep, detected)
    else:  # TO_BOB_DISCARD: silently leaves the interferometer
        event = classify_event(variant, phi, port, None, alice_enc.theta)
        hit, reason = False, None

    if hit:
        event = EventClass.EVE_DETECTED
        announcements.append(Announcement("bob", "eve-alert", reason))

    inferred = eve_infer_bit(fwd_obs, bwd_obs, scenario, prep.basis)

    return TrialRecord(
        index,
        bob_prep,
        alice_enc,
        port,
        detected,
        presumed,
        tuple(announcements),
        event,
        hit,
        reason,
        decoded,
        readable,
        observations,
        inferred,
    )


def run_trial(
    variant: ProtocolVariant,
    r: float,
    eve: Union[EveScenario, EvePolicy],
    rng,
    *,
    phi_mode: str = "uniform",
    message_bit: Optional[int] = None,
    index: int = 0,
) -> TrialRecord:
    """Draw all private settings and run one complete round.

    ``rng`` needs only a ``random()`` method; both a numpy Generator and
    the session's internal row streams qualify.
    """
    policy = eve if isinstance(eve, EvePolicy) else EvePolicy.for_scenario(eve)
    r = validate_reflectivity(r)
    bob_prep = draw_bob_preparation(variant, rng, phi_mode)
    alice_enc = draw_alice_encoding(variant, rng, message_bit)
    return execute_trial(variant, r, policy, bob_prep, alice_enc, rng, index)


# ---------------------------------------------------------------------------
# Sessions

#: Trials per randomness block; fixed so that per-trial draws depend only on
#: (master_seed, stream_tag, trial_index).
BLOCK = 4096
#: Uniform draws available to one trial (a round consumes at most 14).
DRAWS_PER_TRIAL = 16


class _RowStream:
    """Uniform draws for a single trial, pre-generated in blocks."""

    __slots__ = ("_row", "_i")

    def __init__(self, row) -> None:
        self._row = row
        self._i = 0

    def random(self) -> float:
        v = self._row[self._i]
        self._i += 1
        return v


def _block_uniforms(master_seed: int, stream_tag: int, block_index: int) -> list:
    key = np.array(
        [master_seed & 0xFFFFFFFFFFFFFFFF, ((stream_tag & 0xFFFFFFFF) << 32) | (block_index & 0xFFFFFFFF)],
        dtype=np.uint64,
    )
    gen = np.random.Generator(np.random.Philox(key=key))
    # Plain Python floats: the per-trial arithmetic runs on scalars.
    return gen.random((BLOCK, DRAWS_PER_TRIAL)).tolist()


_MESSAGE = EventClass.MESSAGE_DECODED


def _accumulate(stats: SessionStatistics, rec: TrialRecord, is_super: bool) -> None:
    stats.trials += 1
    ev = rec.event
    events = stats.events
    events[ev] = events.get(ev, 0) + 1
    key = (rec.bob_prep.phi, rec.port)
    pp = stats.phi_port
    pp[key] = pp.get(key, 0) + 1
    if rec.eve_reason is not None:
        dr = stats.detection_reasons
        dr[rec.eve_reason] = dr.get(rec.eve_reason, 0) + 1
    if ev is _MESSAGE:
        if rec.decoded_bit is not None:
            stats.decoded_bits += 1
            if rec.decoded_bit != rec.alice_enc.message_bit:
                stats.decode_errors += 1
        else:
            stats.unreadable_message_rounds += 1
    if rec.eve_inferred_bit is not None:
        stats.eve_inferred += 1
        if ev is _MESSAGE and rec.eve_inferred_bit == rec.alice_enc.message_bit:
            stats.eve_success += 1
            if is_super:
                stats.eve_verified += 1


def _resolve_phi_mode(variant: ProtocolVariant, phi_mode: Optional[str]) -> str:
    forced = {
        ProtocolVariant.SCHEDULE_S1: "sup-only",
        ProtocolVariant.SCHEDULE_S2: "det-only",
    }.get(variant)
    if forced is not None:
        if phi_mode not in (None, forced):
            raise ValueError(f"variant {variant} pins phi mode to {forced!r}, got {phi_mode!r}")
        return forced
    mode = phi_mode or "uniform"
    if mode not in _PHI_TABLE:
        raise ValueError(f"unknown phi mode {mode!r}")
    return mode


def _resolve_r(variant: ProtocolVariant, r: Optional[float]) -> float:
    forced = {ProtocolVariant.SCHEDULE_S1: 1.0, ProtocolVariant.SCHEDULE_S2: 0.0}.get(variant)
    if forced is not None:
        if r is not None and float(r) != forced:
            raise ValueError(f"variant {variant} pins r to {forced}, got {r}")
        return forced
    if r is None:
        raise ValueError(f"variant {variant} requires an explicit reflectivity")
    return validate_reflectivity(r)


def _run_range(
    variant: ProtocolVariant,
    r: float,
    policy: EvePolicy,
    lo: int,
    hi: int,
    master_seed: int,
    stream_tag: int,
    phi_mode: str,
    message_bits: Optional[Sequence[int]],
    sink: Optional[Callable[[TrialRecord], None]] = None,
) -> SessionStatistics:
    stats = SessionStatistics()
    is_super = policy.scenario is EveScenario.SUPER
    block_index = -1
    uniforms = None
    for t in range(lo, hi):
        b, row = divmod(t, BLOCK)
        if b != block_index:
            uniforms = _block_uniforms(master_seed, stream_tag, b)
            block_index = b
        stream = _RowStream(uniforms[row])
        bit = message_bits[t] if message_bits is not None else None
        bob_prep = draw_bob_preparation(variant, stream, phi_mode)
        alice_enc = draw_alice_encoding(variant, stream, bit)
        rec = execute_trial(variant, r, policy, bob_prep, alice_enc, stream, t)
        _accumulate(stats, rec, is_super)
        if sink is not None:
            sink(rec)
    return stats


def _run_range_star(args) -> SessionStatistics:
    return _run_range(*args)


def run_session(
    variant: ProtocolVariant,
    r: Optional[float],
    eve: Union[EveScenario, EvePolicy],
    n_trials: int,
    master_seed: int,
    *,
    phi_mode: Optional[str] = None,
    workers: int = 1,
    message_bits: Optional[Sequence[int]] = None,
    record_sink: Optional[Callable[[TrialRecord], None]] = None,
    stream_tag: int = 0,
) -> SessionStatistics:
    """Aggregate ``n_trials`` independent rounds.

    Statistics depend only on the configuration and ``master_seed``; the
    worker count changes the wall clock, never the result. A
    ``record_sink`` (transcript consumer) requires ``workers=1`` so records
    arrive in trial order.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    policy = eve if isinstance(eve, EvePolicy) else EvePolicy.for_scenario(eve)
    mode = _resolve_phi_mode(variant, phi_mode)
    r_eff = _resolve_r(variant, r)
    if message_bits is not None and len(message_bits) < n_trials:
        raise ValueError("message_bits must supply at least one bit per trial")

    if workers <= 1 or n_trials < 2 * BLOCK:
        return _run_range(
            variant, r_eff, policy, 0, n_trials, master_seed, stream_tag, mode, message_bits, record_sink
        )
    if record_sink is not None:
        raise ValueError("a record sink requires workers=1")

    bounds = [round(i * n_trials / workers) for i in range(workers + 1)]
    tasks = [
        (variant, r_eff, policy, lo, hi, master_seed, stream_tag, mode, message_bits)
        for lo, hi in zip(bounds, bounds[1:])
        if hi > lo
    ]
    stats = SessionStatistics()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_range_star, tasks):
            stats = stats.merge(part)
    return stats


# ---------------------------------------------------------------------------
# Beforehand schedule

@dataclass(frozen=True)
class StageResult:
    label: str
    variant: ProtocolVariant
    r: float
    statistics: SessionStatistics


@dataclass(frozen=True)
class ScheduleResult:
    stages: tuple
    verdict: str  # "clear" | "eve-detected"
    message_phase_unlocked: bool

    @property
    def total_detections(self) -> int:
        return sum(s.statistics.eve_detections for s in self.stages)


def run_schedule(
    stage_trials: Sequence[Union[int, tuple[str, int]]],
    eve: Union[EveScenario, EvePolicy],
    master_seed: int,
    *,
    workers: int = 1,
) -> ScheduleResult:
    """Alternate the two beforehand test stages and gate on the outcome.

    Stage S1 floods the checking detectors (r=1, superposition paths
    only); stage S2 exercises the probe rules that expose a
    preparation-reading interceptor (r=0, deterministic paths, probe
    angle, random analyzer basis). Stages may be given as bare trial
    counts (labels alternate S1, S2, ...) or as ("S1"|"S2", count) pairs,
    which must alternate starting at S1. The message phase unlocks only on
    a fully clear run.
    """
    if not stage_trials:
        raise ValueError("schedule needs at least one stage")
    normalized: list[tuple[str, int]] = []
    for j, spec in enumerate(stage_trials):
        expected = "S1" if j % 2 == 0 else "S2"
        if isinstance(spec, tuple):
            label, count = spec[0].upper(), int(spec[1])
            if label != expected:
                raise ValueError(f"stage {j + 1} must be {expected}, got {label}")
        else:
            label, count = expected, int(spec)
        if count < 1:
            raise ValueError("every stage needs at least one trial")
        normalized.append((label, count))

    stages: list[StageResult] = []
    for j, (label, count) in enumerate(normalized):
        variant = ProtocolVariant.SCHEDULE_S1 if label == "S1" else ProtocolVariant.SCHEDULE_S2
        r_eff = 1.0 if label == "S1" else 0.0
        stats = run_session(
            variant, r_eff, eve, count, master_seed, workers=workers, stream_tag=j + 1
        )
        stages.append(StageResult(label=label, variant=variant, r=r_eff, statistics=stats))

    detections = sum(s.statistics.eve_detections for s in stages)
    verdict = "clear" if detections == 0 else "eve-detected"
    return ScheduleResult(
        stages=tuple(stages), verdict=verdict, message_phase_unlocked=(verdict == "clear")
    )
