"""Pure polarization algebra for a single photon.

Jones vectors over the {H, V} axes, the quarter-wave-plate unitary, the
QWP-mirror-QWP message operation family, and Born-rule measurement in the
two mutually unbiased linear bases (H/V and D/A).

Conventions: every unitary keeps its exact global phase (the message
operation carries a -i factor); protocol-level comparisons that should be
phase-blind go through :func:`equal_up_to_global_phase`.
"""

from __future__ import annotations

import cmath
import enum
import math
from typing import NamedTuple

import numpy as np

#: Tolerance for algebraic identities (unitarity, normalization).
ALGEBRA_TOL = 1e-12
#: Tolerance for phase-equivalence comparisons.
PHASE_TOL = 1e-10

SQRT_HALF = 1.0 / math.sqrt(2.0)


class PolarizationBasis(enum.Enum):
    """The two mutually unbiased measurement bases."""

    HV = "HV"
    DA = "DA"

    @property
    def labels(self) -> tuple["PolarizationLabel", "PolarizationLabel"]:
        if self is PolarizationBasis.HV:
            return (PolarizationLabel.H, PolarizationLabel.V)
        return (PolarizationLabel.D, PolarizationLabel.A)

    @property
    def other(self) -> "PolarizationBasis":
        return PolarizationBasis.DA if self is PolarizationBasis.HV else PolarizationBasis.HV

    def __str__(self) -> str:
        return self.value


class PolarizationLabel(enum.Enum):
    """The four linear polarization states used by the protocol."""

    H = "H"
    V = "V"
    D = "D"
    A = "A"

    def __init__(self, symbol: str) -> None:
        self.basis = PolarizationBasis.HV if symbol in ("H", "V") else PolarizationBasis.DA

    def __str__(self) -> str:  # keeps reports/transcripts compact
        return self.value


class JonesVector(NamedTuple):
    """Complex amplitudes on the H and V polarization axes.

    Sub-normalized vectors are legal (they appear as branch amplitudes in
    the apparatus); states fed to measurements must have nonzero norm.
    """

    amp_h: complex
    amp_v: complex

    def norm_sq(self) -> float:
        return (self.amp_h * self.amp_h.conjugate() + self.amp_v * self.amp_v.conjugate()).real

    def normalized(self) -> "JonesVector":
        n = math.sqrt(self.norm_sq())
        if n < 1e-15:
            raise ValueError("cannot normalize a zero Jones vector")
        return JonesVector(self.amp_h / n, self.amp_v / n)

    def scaled(self, factor: complex) -> "JonesVector":
        return JonesVector(self.amp_h * factor, self.amp_v * factor)

    def inner(self, other: "JonesVector") -> complex:
        """⟨self|other⟩ with the left argument conjugated."""
        return self.amp_h.conjugate() * other.amp_h + self.amp_v.conjugate() * other.amp_v

    def is_normalized(self, tol: float = ALGEBRA_TOL) -> bool:
        return abs(self.norm_sq() - 1.0) <= tol


ZERO_VECTOR = JonesVector(0j, 0j)

_PREPARE = {
    PolarizationLabel.H: JonesVector(1.0 + 0j, 0j),
    PolarizationLabel.V: JonesVector(0j, 1.0 + 0j),
    PolarizationLabel.D: JonesVector(SQRT_HALF + 0j, SQRT_HALF + 0j),
    PolarizationLabel.A: JonesVector(SQRT_HALF + 0j, -SQRT_HALF + 0j),
}

#: Image of each label under the bit-flip operation sigma_y (up to phase).
SIGMA_Y_IMAGE = {
    PolarizationLabel.H: PolarizationLabel.V,
    PolarizationLabel.V: PolarizationLabel.H,
    PolarizationLabel.D: PolarizationLabel.A,
    PolarizationLabel.A: PolarizationLabel.D,
}

IDENTITY = np.eye(2, dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def prepare_polarization(label: PolarizationLabel) -> JonesVector:
    """Unit Jones vector for one of the four protocol polarizations."""
    return _PREPARE[label]


def qwp_unitary(theta: float) -> np.ndarray:
    """Jones matrix of a quarter-wave plate rotated by ``theta`` radians."""
    if not math.isfinite(theta):
        raise ValueError(f"wave-plate angle must be finite, got {theta!r}")
    c = math.cos(2.0 * theta)
    s = math.sin(2.0 * theta)
    return SQRT_HALF * np.array(
        [[1.0 - 1j * c, -1j * s], [-1j * s, 1.0 + 1j * c]], dtype=complex
    )


def message_unitary(theta: float) -> np.ndarray:
    """Round trip through QWP(theta), the mirror, and QWP(-theta).

    Closed form -i [[cos 2θ, sin 2θ], [-sin 2θ, cos 2θ]]; the mirror
    contributes the sigma_z in the middle of the sandwich. θ=π/2 gives the
    identity and θ=π/4 gives sigma_y, both up to the retained -i phase;
    θ=π/8 gives the probe operation of the modified protocol.
    """
    if not math.isfinite(theta):
        raise ValueError(f"wave-plate angle must be finite, got {theta!r}")
    c = math.cos(2.0 * theta)
    s = math.sin(2.0 * theta)
    return -1j * np.array([[c, s], [-s, c]], dtype=complex)


def is_unitary(u: np.ndarray, tol: float = ALGEBRA_TOL) -> bool:
    return bool(np.allclose(u.conj().T @ u, IDENTITY, rtol=0.0, atol=tol))


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = PHASE_TOL) -> bool:
    """True iff a = e^{iα} b for some real α.

    For 2x2 unitaries |tr(a† b)| = 2 exactly when they agree up to a global
    phase, and is strictly smaller otherwise.
    """
    return bool(abs(np.trace(a.conj().T @ b)) >= 2.0 - tol)


def apply_unitary(u: np.ndarray, state: JonesVector) -> JonesVector:
    return JonesVector(
        u[0, 0] * state.amp_h + u[0, 1] * state.amp_v,
        u[1, 0] * state.amp_h + u[1, 1] * state.amp_v,
    )


def born_probabilities(
    state: JonesVector, basis: PolarizationBasis
) -> dict[PolarizationLabel, float]:
    """Outcome probabilities |⟨outcome|state⟩|² for a basis measurement.

    The input may be sub-normalized; probabilities then sum to its squared
    norm. A zero-norm state has no measurement statistics and is rejected.
    """
    norm_sq = state.norm_sq()
    if norm_sq <= 0.0:
        raise ValueError("born_probabilities requires a state with positive norm")
    l0, l1 = basis.labels
    p0 = abs(_PREPARE[l0].inner(state)) ** 2
    p1 = abs(_PREPARE[l1].inner(state)) ** 2
    return {l0: p0, l1: p1}


def measure_polarization(
    state: JonesVector, basis: PolarizationBasis, u: float
) -> tuple[PolarizationLabel, JonesVector]:
    """Projective measurement driven by one uniform draw ``u`` in [0, 1).

    Returns the outcome label and the post-measurement eigenstate.
    """
    norm_sq = state.norm_sq()
    if norm_sq <= 0.0:
        raise ValueError("cannot measure a zero Jones vector")
    l0, l1 = basis.labels
    p0 = abs(_PREPARE[l0].inner(state)) ** 2 / norm_sq
    outcome = l0 if u < p0 else l1
    return outcome, _PREPARE[outcome]


def nearest_label(state: JonesVector, tol: float = 1e-9) -> PolarizationLabel:
    """Label whose state matches ``state`` up to a phase.

    Used for Alice's presumed-polarization bookkeeping; with protocol wave
    plate angles the overlap is exactly 1, so anything farther than ``tol``
    signals a bug in the caller.
    """
    norm_sq = state.norm_sq()
    best, best_p = None, -1.0
    for label, vec in _PREPARE.items():
        p = abs(vec.inner(state)) ** 2 / norm_sq
        if p > best_p:
            best, best_p = label, p
    if best_p < 1.0 - tol:
        raise ValueError(f"state {state!r} is not a protocol polarization (overlap {best_p})")
    return best


def phase_of(value: complex) -> float:
    return cmath.phase(value)
