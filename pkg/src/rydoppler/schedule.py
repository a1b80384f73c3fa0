"""Pulse schedules for the pi-2Npi-pi dephasing-cancellation protocol.

The control atom runs pi (ground->r1, wavevector k), then 2N*pi cycling
r1<->r2 (wavevector k_w), then pi back down. Cancellation of the
velocity-induced phase requires

    k_w / k = 2 + Omega2 / (N * Omega1),

which fixes Omega2 given Omega1, N and the wavevector pair. The target atom
runs its own pi-2N'pi-pi entirely inside the control's wait window; the
derived Rabi set makes the two windows coincide exactly. A traditional
comparator gate (single Rydberg level, plain pi / 2pi / pi) with identical
timing is also provided.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

from .atomdata import InfeasibleSchemeError
from .constants import TWO_PI

CONTROL = "control"
TARGET = "target"
GROUND_R1 = "ground_r1"
R1_R2 = "r1_r2"

_AREA_RTOL = 1e-12


class ScheduleError(ValueError):
    """A schedule cannot be constructed from the given parameters."""


@dataclass(frozen=True)
class PulseSegment:
    """One constant-amplitude drive segment on one atom."""

    atom: str  # CONTROL or TARGET
    transition: str  # GROUND_R1 or R1_R2
    rabi_magnitude: float  # rad/s, > 0
    wavevector: float  # rad/m
    t_start: float  # s
    duration: float  # s

    def __post_init__(self):
        if self.atom not in (CONTROL, TARGET):
            raise ScheduleError(f"unknown atom {self.atom!r}")
        if self.transition not in (GROUND_R1, R1_R2):
            raise ScheduleError(f"unknown transition {self.transition!r}")
        if self.rabi_magnitude <= 0 or self.duration <= 0:
            raise ScheduleError("rabi magnitude and duration must be positive")
        area = self.pulse_area
        n_half = area / math.pi
        if abs(n_half - round(n_half)) > _AREA_RTOL * max(1.0, n_half) or round(n_half) < 1:
            raise ScheduleError(f"pulse area must be an integer multiple of pi, got {area}")

    @property
    def pulse_area(self) -> float:
        return self.rabi_magnitude * self.duration

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    def active(self, t: float) -> bool:
        return self.t_start <= t < self.t_end


@dataclass(frozen=True)
class ProtocolParams:
    """Solved drive parameters for one atom's pi-2Npi-pi sequence."""

    omega1: float  # rad/s
    omega2: float  # rad/s
    n_loops: int
    k: float  # rad/m
    kw: float  # rad/m

    def __post_init__(self):
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ScheduleError("Rabi magnitudes must be positive")
        if self.n_loops < 1 or self.n_loops != int(self.n_loops):
            raise ScheduleError(f"loop count must be a positive integer, got {self.n_loops}")
        lhs = self.kw / self.k
        rhs = 2.0 + self.omega2 / (self.n_loops * self.omega1)
        if abs(lhs - rhs) > 1e-12 * abs(lhs):
            raise ScheduleError(
                f"cancellation condition violated: kw/k={lhs!r} vs 2+Omega2/(N*Omega1)={rhs!r}"
            )

    @property
    def ratio(self) -> float:
        return self.kw / self.k


@dataclass(frozen=True)
class GateSchedule:
    """Ordered drive segments for both atoms over one gate."""

    control_segments: tuple
    target_segments: tuple
    t_gate: float
    t_wait: float

    def __post_init__(self):
        for segs in (self.control_segments, self.target_segments):
            for a, b in zip(segs, segs[1:]):
                if b.t_start < a.t_end - 1e-18:
                    raise ScheduleError("segments on the same atom overlap")

    @property
    def segments(self) -> tuple:
        return self.control_segments + self.target_segments

    def max_rabi(self) -> float:
        return max(s.rabi_magnitude for s in self.segments)


def solve_condition(omega1: float, n_loops: int, k: float, kw: float) -> ProtocolParams:
    """Solve the cancellation condition for Omega2 = N * Omega1 * (kw/k - 2)."""
    if omega1 <= 0:
        raise ScheduleError(f"omega1 must be positive, got {omega1}")
    if n_loops < 1:
        raise ScheduleError(f"n_loops must be >= 1, got {n_loops}")
    ratio = kw / k
    if ratio <= 2.0:
        raise InfeasibleSchemeError(
            f"kw/k = {ratio} <= 2: no positive Omega2 satisfies the cancellation condition"
        )
    omega2 = n_loops * omega1 * (ratio - 2.0)
    return ProtocolParams(omega1=omega1, omega2=omega2, n_loops=n_loops, k=k, kw=kw)


def gate_time(params: ProtocolParams) -> float:
    """Total gate duration (2*pi/Omega1) * (kw - k)/(kw - 2k)."""
    denom = params.kw - 2.0 * params.k
    if denom <= 0:
        raise InfeasibleSchemeError("kw <= 2k: gate duration undefined")
    return (TWO_PI / params.omega1) * (params.kw - params.k) / denom


def wait_time(params: ProtocolParams) -> float:
    """Wait-window duration t_gate * k/(kw - k) = 2*N*pi/Omega2."""
    return gate_time(params) * params.k / (params.kw - params.k)


def derive_target_rabi(params: ProtocolParams) -> tuple[float, float]:
    """Target-atom Rabi set (Omega1', Omega2') for an N' = 2 inner sequence.

    Omega1' = Omega1 * (kw - k)/k scales the target pi pulses into the wait
    window; Omega2' = 2 * Omega1' * (kw - 2k)/k then satisfies the target's
    own cancellation condition, and the full target sequence exactly fills
    the wait window.
    """
    ratio = params.ratio
    if ratio <= 2.0:
        raise InfeasibleSchemeError("kw/k <= 2")
    omega1p = params.omega1 * (ratio - 1.0)
    omega2p = 2.0 * omega1p * (ratio - 2.0)
    return omega1p, omega2p


def target_params(params: ProtocolParams, n_target: int = 2) -> ProtocolParams:
    """Solved parameters for the target's pi-2N'pi-pi sequence (N' even)."""
    if n_target < 2 or n_target % 2 != 0:
        raise ScheduleError(
            f"target loop count must be a positive even integer, got {n_target}"
        )
    omega1p = params.omega1 * (params.ratio - 1.0)
    return solve_condition(omega1p, n_target, params.k, params.kw)


def _three_pulse(atom: str, p: ProtocolParams, t0: float) -> tuple:
    t_pi = math.pi / p.omega1
    t_w = 2.0 * p.n_loops * math.pi / p.omega2
    return (
        PulseSegment(atom, GROUND_R1, p.omega1, p.k, t0, t_pi),
        PulseSegment(atom, R1_R2, p.omega2, p.kw, t0 + t_pi, t_w),
        PulseSegment(atom, GROUND_R1, p.omega1, p.k, t0 + t_pi + t_w, t_pi),
    )


def build_gate_schedule(params: ProtocolParams, n_target: int = 2) -> GateSchedule:
    """Blockade-gate schedule: control pi-2Npi-pi, target pi-2N'pi-pi in the wait window."""
    t_gate = gate_time(params)
    t_w = wait_time(params)
    if t_gate <= 0 or t_w <= 0:
        raise ScheduleError("gate and wait durations must be positive")
    t_pi = math.pi / params.omega1
    control = _three_pulse(CONTROL, params, 0.0)

    tp = target_params(params, n_target)
    target = _three_pulse(TARGET, tp, t_pi)
    target_span = target[-1].t_end - target[0].t_start
    if abs(target_span - t_w) > 1e-9 * t_w:
        raise ScheduleError(
            f"target sequence ({target_span!r} s) does not fill the wait window ({t_w!r} s)"
        )
    return GateSchedule(
        control_segments=control, target_segments=target, t_gate=t_gate, t_wait=t_w
    )


def build_traditional_schedule(
    omega: float, t_wait: float, k: float, t_pi: float | None = None
) -> GateSchedule:
    """Comparator gate: control pi / gap / pi, target one centered 2pi pulse.

    All pulses drive ground<->r1 with the same Rabi magnitude and wavevector;
    only one Rydberg level is used. The target 2pi pulse must fit inside the
    wait window and is placed symmetrically within it.
    """
    if omega <= 0:
        raise ScheduleError("omega must be positive")
    t_2pi = TWO_PI / omega
    if t_2pi > t_wait * (1.0 + 1e-12):
        raise ScheduleError(
            f"target 2pi pulse ({t_2pi!r} s) does not fit in the wait window ({t_wait!r} s)"
        )
    if t_pi is None:
        t_pi = math.pi / omega
    control = (
        PulseSegment(CONTROL, GROUND_R1, omega, k, 0.0, math.pi / omega),
        PulseSegment(CONTROL, GROUND_R1, omega, k, t_pi + t_wait, math.pi / omega),
    )
    target = (
        PulseSegment(TARGET, GROUND_R1, omega, k, t_pi + (t_wait - t_2pi) / 2.0, t_2pi),
    )
    return GateSchedule(
        control_segments=control,
        target_segments=target,
        t_gate=t_pi + t_wait + math.pi / omega,
        t_wait=t_wait,
    )


def serialize_schedule(schedule: GateSchedule) -> str:
    """Text form, one record per segment, floats at 17 significant digits."""
    out = io.StringIO()
    out.write("# atom transition rabi_rad_per_s wavevector_rad_per_m t_start_s duration_s\n")
    out.write(f"t_gate {schedule.t_gate:.17g}\n")
    out.write(f"t_wait {schedule.t_wait:.17g}\n")
    for seg in schedule.segments:
        out.write(
            f"{seg.atom} {seg.transition} {seg.rabi_magnitude:.17g} "
            f"{seg.wavevector:.17g} {seg.t_start:.17g} {seg.duration:.17g}\n"
        )
    return out.getvalue()


def parse_schedule(text: str) -> GateSchedule:
    """Inverse of serialize_schedule."""
    t_gate = t_wait = None
    control, target = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "t_gate":
            t_gate = float(fields[1])
        elif fields[0] == "t_wait":
            t_wait = float(fields[1])
        else:
            atom, transition, rabi, wavevector, t_start, duration = fields
            seg = PulseSegment(
                atom, transition, float(rabi), float(wavevector), float(t_start), float(duration)
            )
            (control if atom == CONTROL else target).append(seg)
    if t_gate is None or t_wait is None:
        raise ScheduleError("schedule text missing t_gate/t_wait records")
    return GateSchedule(tuple(control), tuple(target), t_gate, t_wait)
