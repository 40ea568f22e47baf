"""Simulator and security analytics for a two-path single-photon QSDC scheme.

The package splits along the physical layers:

* :mod:`qsdcsim.optics`    — Jones vectors, wave-plate unitaries, Born rule.
* :mod:`qsdcsim.apparatus` — the tunable beam splitter and detector network.
* :mod:`qsdcsim.adversary` — intercept-resend eavesdropper models.
* :mod:`qsdcsim.protocol`  — full rounds, sessions, and the beforehand schedule.
* :mod:`qsdcsim.analytics` — exact closed-form probabilities and sweeps.
* :mod:`qsdcsim.report`    — Monte Carlo vs closed-form comparison reports.
* :mod:`qsdcsim.cli`       — the ``qsdcsim`` command.
"""

from .adversary import EveObservation, EvePolicy, EveScenario
from .analytics import (
    EventProbabilities,
    UndetectedDecomposition,
    eavesdrop_probability,
    event_probabilities,
    per_phi_event_table,
    supereve_probability,
    sweep,
    undetected_decomposition,
)
from .apparatus import (
    ArmLabel,
    OutputPort,
    PhiSetting,
    PortAmplitudeMap,
    arm_propagate,
    propagate,
    sample_port,
    tbs_split,
)
from .optics import (
    JonesVector,
    PolarizationBasis,
    PolarizationLabel,
    born_probabilities,
    equal_up_to_global_phase,
    message_unitary,
    prepare_polarization,
    qwp_unitary,
)
from .protocol import (
    AliceEncoding,
    Announcement,
    BobPreparation,
    EventClass,
    ProtocolVariant,
    ScheduleResult,
    SessionStatistics,
    ThetaOption,
    TrialRecord,
    classify_event,
    check_eve_detection,
    decode_message,
    run_schedule,
    run_session,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "AliceEncoding",
    "Announcement",
    "ArmLabel",
    "BobPreparation",
    "EveObservation",
    "EvePolicy",
    "EveScenario",
    "EventClass",
    "EventProbabilities",
    "JonesVector",
    "OutputPort",
    "PhiSetting",
    "PolarizationBasis",
    "PolarizationLabel",
    "PortAmplitudeMap",
    "ProtocolVariant",
    "ScheduleResult",
    "SessionStatistics",
    "ThetaOption",
    "TrialRecord",
    "UndetectedDecomposition",
    "arm_propagate",
    "born_probabilities",
    "check_eve_detection",
    "classify_event",
    "decode_message",
    "eavesdrop_probability",
    "equal_up_to_global_phase",
    "event_probabilities",
    "message_unitary",
    "per_phi_event_table",
    "prepare_polarization",
    "propagate",
    "qwp_unitary",
    "run_schedule",
    "run_session",
    "run_trial",
    "sample_port",
    "supereve_probability",
    "sweep",
    "tbs_split",
    "undetected_decomposition",
]
