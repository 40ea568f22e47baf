"""The sender-side mode network: tunable beam splitter and detector tree.

A photon leaves Bob's tunable beam splitter (a Mach-Zehnder stage with
phase φ) either deterministically into one arm (φ ∈ {0, π}) or as a
coherent superposition of both arms (φ ∈ {π/2, 3π/2}). In each arm a
partially reflecting beam splitter with reflectivity r taps the photon
off toward detectors before and after Alice's wave-plate module:

* D_A3 / D_A4 sit behind a 50:50 combiner fed by the first-pass
  reflections of both arms, so they see the *unmodified* polarization;
* D_A1 (right arm) and D_A2 (left arm) catch the photon on its way back
  out, *after* the message operation;
* the doubly transmitted amplitude returns to Bob — into his analyzer on
  deterministic paths, or back out of the interferometer (discarded) on
  superposition paths.

Amplitude bookkeeping is exact: for every setting the squared norms over
all output ports sum to one.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable

import numpy as np

from .optics import ALGEBRA_TOL, JonesVector, ZERO_VECTOR

PHI_VALUES = (0.0, math.pi / 2.0, math.pi, 3.0 * math.pi / 2.0)

SQRT_HALF = 1.0 / math.sqrt(2.0)


class PhiSetting(enum.Enum):
    """Tunable beam-splitter phase; the photon's routing mode."""

    PHI_0 = 0.0
    PHI_HALF_PI = math.pi / 2.0
    PHI_PI = math.pi
    PHI_3HALF_PI = 3.0 * math.pi / 2.0

    def __init__(self, radians: float) -> None:
        self.radians = radians
        self.is_deterministic = radians in (0.0, math.pi)

    @property
    def deterministic_arm(self) -> "ArmLabel":
        if self is PhiSetting.PHI_0:
            return ArmLabel.R
        if self is PhiSetting.PHI_PI:
            return ArmLabel.L
        raise ValueError(f"{self} routes into a path superposition, not a single arm")

    def __str__(self) -> str:
        return {0.0: "0", math.pi / 2.0: "pi/2", math.pi: "pi", 3.0 * math.pi / 2.0: "3pi/2"}[self.value]


class ArmLabel(enum.Enum):
    R = "R"
    L = "L"

    @property
    def other(self) -> "ArmLabel":
        return ArmLabel.L if self is ArmLabel.R else ArmLabel.R

    def __str__(self) -> str:
        return self.value


class OutputPort(enum.Enum):
    TO_BOB_ANALYZER = "ToBobAnalyzer"
    TO_BOB_DISCARD = "ToBobDiscard"
    DA1 = "DA1"
    DA2 = "DA2"
    DA3 = "DA3"
    DA4 = "DA4"

    @property
    def detector_number(self) -> int:
        return {"DA1": 1, "DA2": 2, "DA3": 3, "DA4": 4}[self.value]

    def __str__(self) -> str:
        return self.value


DETECTOR_PORTS = (OutputPort.DA1, OutputPort.DA2, OutputPort.DA3, OutputPort.DA4)

#: Ports a photon can reach for each φ when nobody tampers with it.
VALID_PORTS = {
    PhiSetting.PHI_0: frozenset({OutputPort.TO_BOB_ANALYZER, OutputPort.DA1, OutputPort.DA3, OutputPort.DA4}),
    PhiSetting.PHI_PI: frozenset({OutputPort.TO_BOB_ANALYZER, OutputPort.DA2, OutputPort.DA3, OutputPort.DA4}),
    PhiSetting.PHI_HALF_PI: frozenset({OutputPort.TO_BOB_DISCARD, OutputPort.DA1, OutputPort.DA2, OutputPort.DA4}),
    PhiSetting.PHI_3HALF_PI: frozenset({OutputPort.TO_BOB_DISCARD, OutputPort.DA1, OutputPort.DA2, OutputPort.DA3}),
}

#: The combiner detector that fires on an undisturbed superposition path.
SUPERPOSED_COMBINER_PORT = {
    PhiSetting.PHI_HALF_PI: OutputPort.DA4,
    PhiSetting.PHI_3HALF_PI: OutputPort.DA3,
}

_PORT_ORDER = (
    OutputPort.TO_BOB_ANALYZER,
    OutputPort.TO_BOB_DISCARD,
    OutputPort.DA1,
    OutputPort.DA2,
    OutputPort.DA3,
    OutputPort.DA4,
)


def validate_reflectivity(r: float) -> float:
    r = float(r)
    if not (0.0 <= r <= 1.0):
        raise ValueError(f"reflectivity must lie in [0, 1], got {r}")
    return r


def tbs_split(phi: PhiSetting) -> tuple[complex, complex]:
    """Path amplitudes (right, left) leaving the tunable beam splitter."""
    if phi is PhiSetting.PHI_0:
        return (1.0 + 0j, 0j)
    if phi is PhiSetting.PHI_HALF_PI:
        return (SQRT_HALF + 0j, SQRT_HALF + 0j)
    if phi is PhiSetting.PHI_3HALF_PI:
        return (SQRT_HALF + 0j, -SQRT_HALF + 0j)
    if phi is PhiSetting.PHI_PI:
        return (0j, 1.0 + 0j)
    raise ValueError(f"invalid phase setting {phi!r}")


class PortAmplitudeMap:
    """Jones amplitudes assigned to every reachable output port.

    A port may carry more than one orthogonal sub-mode (the discarded
    return of a superposition path keeps one branch per arm, which need
    not share a polarization when the two arms apply different
    operations). Port weights are the summed squared norms of their
    branches, and the weights over all ports sum to one.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[OutputPort, JonesVector]]):
        self._entries = [(p, v) for p, v in entries if v.norm_sq() > 0.0]

    def branches(self, port: OutputPort) -> tuple[JonesVector, ...]:
        return tuple(v for p, v in self._entries if p is port)

    def weight(self, port: OutputPort) -> float:
        return sum(v.norm_sq() for p, v in self._entries if p is port)

    def jones(self, port: OutputPort) -> JonesVector:
        """The port's amplitude when it carries a single sub-mode."""
        found = self.branches(port)
        if len(found) != 1:
            raise ValueError(f"port {port} carries {len(found)} sub-modes, not 1")
        return found[0]

    def ports(self) -> tuple[OutputPort, ...]:
        seen = []
        for p, _ in self._entries:
            if p not in seen:
                seen.append(p)
        return tuple(seen)

    def total_weight(self) -> float:
        return sum(v.norm_sq() for _, v in self._entries)

    def weights(self) -> dict[OutputPort, float]:
        out: dict[OutputPort, float] = {}
        for p, v in self._entries:
            out[p] = out.get(p, 0.0) + v.norm_sq()
        return out

    def require_isometry(self, tol: float = 1e-9) -> None:
        total = self.total_weight()
        if abs(total - 1.0) > tol:
            raise RuntimeError(f"port amplitudes violate unitarity: total weight {total}")

    def entries(self) -> tuple[tuple[OutputPort, JonesVector], ...]:
        return tuple(self._entries)


def _mat(u) -> tuple[tuple[complex, complex], tuple[complex, complex]]:
    """Accept a 2x2 ndarray or nested sequence; return nested tuples."""
    if isinstance(u, np.ndarray):
        rows = u.tolist()
        return ((rows[0][0], rows[0][1]), (rows[1][0], rows[1][1]))
    return ((u[0][0], u[0][1]), (u[1][0], u[1][1]))


def _apply(m, v: JonesVector) -> JonesVector:
    return JonesVector(
        m[0][0] * v.amp_h + m[0][1] * v.amp_v,
        m[1][0] * v.amp_h + m[1][1] * v.amp_v,
    )


def _require_unitary_tuple(m, name: str) -> None:
    a, b = m[0]
    c, d = m[1]
    col0 = (a * a.conjugate() + c * c.conjugate()).real
    col1 = (b * b.conjugate() + d * d.conjugate()).real
    cross = a.conjugate() * b + c.conjugate() * d
    if abs(col0 - 1.0) > 1e-9 or abs(col1 - 1.0) > 1e-9 or abs(cross) > 1e-9:
        raise ValueError(f"{name} is not unitary")


def propagate(
    phi: PhiSetting,
    r: float,
    u_right,
    u_left,
    photon: JonesVector,
) -> PortAmplitudeMap:
    """Send one normalized photon through the full detector network.

    Amplitude coefficients and signs follow the beam-splitter mode mapping
    line by line for each φ; the polarization factors attach the arm
    operations ``u_right``/``u_left`` on the branches that traverse the
    wave-plate modules (D_A1, D_A2 and the return) and leave the first-pass
    branches (D_A3, D_A4) untouched.
    """
    r = validate_reflectivity(r)
    if not photon.is_normalized(1e-9):
        raise ValueError("input photon must be normalized")
    mu_r, mu_l = _mat(u_right), _mat(u_left)
    _require_unitary_tuple(mu_r, "u_right")
    _require_unitary_tuple(mu_l, "u_left")

    t = 1.0 - r
    k_arm = math.sqrt(r * t)            # single-arm tap after the module
    k_comb = math.sqrt(r / 2.0)         # first-pass tap into the combiner
    k_arm_sup = math.sqrt(r * t / 2.0)  # per-arm tap on a superposed path
    k_bs3 = math.sqrt(r)                # combiner output on a superposed path

    out_r = _apply(mu_r, photon)
    out_l = _apply(mu_l, photon)
    entries: list[tuple[OutputPort, JonesVector]] = []

    if phi is PhiSetting.PHI_0:
        entries.append((OutputPort.TO_BOB_ANALYZER, out_r.scaled(t)))
        entries.append((OutputPort.DA1, out_r.scaled(k_arm)))
        entries.append((OutputPort.DA3, photon.scaled(k_comb)))
        entries.append((OutputPort.DA4, photon.scaled(-k_comb)))
    elif phi is PhiSetting.PHI_PI:
        entries.append((OutputPort.TO_BOB_ANALYZER, out_l.scaled(-t)))
        entries.append((OutputPort.DA2, out_l.scaled(k_arm)))
        entries.append((OutputPort.DA3, photon.scaled(-k_comb)))
        entries.append((OutputPort.DA4, photon.scaled(-k_comb)))
    elif phi is PhiSetting.PHI_HALF_PI:
        entries.append((OutputPort.TO_BOB_DISCARD, out_r.scaled(t * SQRT_HALF)))
        entries.append((OutputPort.TO_BOB_DISCARD, out_l.scaled(-t * SQRT_HALF)))
        entries.append((OutputPort.DA1, out_r.scaled(k_arm_sup)))
        entries.append((OutputPort.DA2, out_l.scaled(k_arm_sup)))
        entries.append((OutputPort.DA4, photon.scaled(-k_bs3)))
    elif phi is PhiSetting.PHI_3HALF_PI:
        entries.append((OutputPort.TO_BOB_DISCARD, out_r.scaled(-t * SQRT_HALF)))
        entries.append((OutputPort.TO_BOB_DISCARD, out_l.scaled(t * SQRT_HALF)))
        entries.append((OutputPort.DA1, out_r.scaled(-k_arm_sup)))
        entries.append((OutputPort.DA2, out_l.scaled(k_arm_sup)))
        entries.append((OutputPort.DA3, photon.scaled(-k_bs3)))
    else:
        raise ValueError(f"invalid phase setting {phi!r}")
    return PortAmplitudeMap(entries)


def arm_propagate(
    phi: PhiSetting,
    r: float,
    u_right,
    u_left,
    state_right: JonesVector,
    state_left: JonesVector,
) -> PortAmplitudeMap:
    """Propagate arbitrary per-arm amplitudes through the detector network.

    This is the linear map underlying :func:`propagate`; it exists so that
    an interceptor can rewrite the per-arm state between the beam splitter
    and the detector tree (a collapsed superposition enters with all its
    weight in one arm). Each arm follows the deterministic-path mode
    mapping; the returning amplitudes recombine at the tunable beam
    splitter, which routes the matching arm into Bob's analyzer for
    deterministic φ and everything else out of the interferometer. For a
    φ=3π/2 input this route agrees with :func:`propagate` up to a global
    sign.
    """
    r = validate_reflectivity(r)
    mu_r, mu_l = _mat(u_right), _mat(u_left)
    t = 1.0 - r
    k_arm = math.sqrt(r * t)
    k_comb = math.sqrt(r / 2.0)

    entries: list[tuple[OutputPort, JonesVector]] = []
    w_r = state_right.norm_sq()
    w_l = state_left.norm_sq()
    if abs(w_r + w_l - 1.0) > 1e-9:
        raise ValueError("per-arm states must carry unit total weight")

    ret_r = ZERO_VECTOR
    ret_l = ZERO_VECTOR
    if w_r > 0.0:
        out_r = _apply(mu_r, state_right)
        entries.append((OutputPort.DA1, out_r.scaled(k_arm)))
        entries.append((OutputPort.DA3, state_right.scaled(k_comb)))
        entries.append((OutputPort.DA4, state_right.scaled(-k_comb)))
        ret_r = out_r.scaled(t)
    if w_l > 0.0:
        out_l = _apply(mu_l, state_left)
        entries.append((OutputPort.DA2, out_l.scaled(k_arm)))
        entries.append((OutputPort.DA3, state_left.scaled(-k_comb)))
        entries.append((OutputPort.DA4, state_left.scaled(-k_comb)))
        ret_l = out_l.scaled(-t)

    if phi.is_deterministic:
        analyzer_ret, stray_ret = (ret_r, ret_l) if phi is PhiSetting.PHI_0 else (ret_l, ret_r)
        entries.append((OutputPort.TO_BOB_ANALYZER, analyzer_ret))
        # A photon returning in the arm the beam splitter is not phased for
        # exits toward the source and is never observed. Unreachable with
        # the shipped interceptor policies (they resend in the found arm).
        entries.append((OutputPort.TO_BOB_DISCARD, stray_ret))
    else:
        entries.append((OutputPort.TO_BOB_DISCARD, ret_r))
        entries.append((OutputPort.TO_BOB_DISCARD, ret_l))

    # Merge the coherent combiner contributions from the two arms.
    merged: list[tuple[OutputPort, JonesVector]] = []
    acc: dict[OutputPort, JonesVector] = {}
    for port, vec in entries:
        if port in (OutputPort.DA3, OutputPort.DA4):
            prev = acc.get(port, ZERO_VECTOR)
            acc[port] = JonesVector(prev.amp_h + vec.amp_h, prev.amp_v + vec.amp_v)
        elif vec.norm_sq() > 0.0:
            merged.append((port, vec))
    for port in (OutputPort.DA3, OutputPort.DA4):
        if port in acc:
            merged.append((port, acc[port]))
    return PortAmplitudeMap(merged)


def sample_port(
    amap: PortAmplitudeMap, rng
) -> tuple[OutputPort, JonesVector]:
    """Draw the clicking port by the Born rule; return its polarization.

    ``rng`` needs only a ``random()`` method yielding uniforms in [0, 1).
    The returned Jones vector is the sampled sub-mode renormalized.
    """
    total = amap.total_weight()
    if abs(total - 1.0) > 1e-9:
        raise RuntimeError(f"port amplitudes violate unitarity: total weight {total}")
    u = rng.random() * total
    acc = 0.0
    entries = amap.entries()
    for port, vec in entries:
        acc += vec.norm_sq()
        if u < acc:
            return port, vec.normalized()
    # Floating-point edge: fall back to the heaviest entry.
    port, vec = max(entries, key=lambda e: e[1].norm_sq())
    return port, vec.normalized()


def port_weight_table(phi: PhiSetting, r: float) -> dict[OutputPort, float]:
    """No-interference port weights for a given setting (polarization-free)."""
    r = validate_reflectivity(r)
    t = 1.0 - r
    if phi.is_deterministic:
        arm_port = OutputPort.DA1 if phi is PhiSetting.PHI_0 else OutputPort.DA2
        return {
            OutputPort.TO_BOB_ANALYZER: t * t,
            arm_port: r * t,
            OutputPort.DA3: r / 2.0,
            OutputPort.DA4: r / 2.0,
        }
    return {
        OutputPort.TO_BOB_DISCARD: t * t,
        OutputPort.DA1: r * t / 2.0,
        OutputPort.DA2: r * t / 2.0,
        SUPERPOSED_COMBINER_PORT[phi]: float(r),
    }
