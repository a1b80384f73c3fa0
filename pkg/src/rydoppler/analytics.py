"""Closed-form phase laws, gate-matrix extraction, and error metrics.

For a resonant drive seen by an atom drifting at velocity v, the drive
phase k*(z0 + v*t) imprints a state phase that is exactly linear in v for
each constant-amplitude segment. The three-stage law for the pi-2Npi-pi
sequence is

    phi1 = k*z0 + k*v*t_pi/2 - pi/2
    phi2 = phi1 + k_w*v*t_w/2 - N*pi
    phi3 = phi2 - k*z0 - k*v*(t_w + 3*t_pi/2) - pi/2

and phi3 collapses to -(N+1)*pi independent of v once the wavevector ratio
satisfies the cancellation condition.

Gate quality is scored by the trace-formula rotation error against the
target diag(1,-1,-1,-1), decay by accumulated Rydberg residence over the
Rydberg lifetime, and thermal averages by a Maxwell-weighted sum over a
uniform velocity grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics, kernel
from .atomdata import DomainError, InteractionSet, ThermalEnsemble
from .constants import TWO_PI
from .schedule import CONTROL, GROUND_R1, GateSchedule, PulseSegment

TARGET_GATE = np.diag([1.0, -1.0, -1.0, -1.0]).astype(complex)


def principal_phase(phi: float) -> float:
    """Wrap a phase to (-pi, pi]."""
    wrapped = math.remainder(phi, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def phase_after_pi(k: float, z0: float, v: float, omega1: float) -> float:
    """Rydberg-state phase after the first pi pulse (unwrapped)."""
    if omega1 <= 0:
        raise DomainError("omega1 must be positive")
    t_pi = math.pi / omega1
    return k * z0 + k * v * t_pi / 2.0 - math.pi / 2.0


def phase_after_wait(phi1: float, kw: float, v: float, omega2: float, n_loops: int) -> float:
    """Phase after the 2N*pi r1<->r2 cycling stage (unwrapped)."""
    if omega2 <= 0:
        raise DomainError("omega2 must be positive")
    t_w = 2.0 * n_loops * math.pi / omega2
    return phi1 + kw * v * t_w / 2.0 - n_loops * math.pi


def phase_after_final(
    phi2: float, k: float, z0: float, v: float, omega1: float, t_w: float
) -> float:
    """Ground-state phase after the closing pi pulse (unwrapped)."""
    if omega1 <= 0:
        raise DomainError("omega1 must be positive")
    t_pi = math.pi / omega1
    return phi2 - k * z0 - k * v * (t_w + 1.5 * t_pi) - math.pi / 2.0


def constant_detuning_propagator(
    omega: float, detuning: float, duration: float, drive_phase_at_start: float = 0.0
) -> np.ndarray:
    """Exact 2x2 unitary for a constant-amplitude, constant-detuning segment.

    Basis (lower, upper) with H = (omega/2)*exp(i*(phase0 + detuning*s))
    |upper><lower| + h.c., s measured from the segment start. This is the
    drift-frame form of the drive Hamiltonians: detuning = k*v and
    phase0 = k*(z0 + v*t_start).
    """
    if duration < 0:
        raise DomainError("duration must be non-negative")
    gen = math.hypot(omega, detuning)
    half = 0.5 * gen * duration
    if gen == 0.0:
        u_rot = np.eye(2, dtype=complex)
    else:
        cos, sin = math.cos(half), math.sin(half)
        sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        sz = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
        u_rot = cos * np.eye(2) - 1j * sin * (omega * sx - detuning * sz) / gen
        u_rot = np.exp(-0.5j * detuning * duration) * u_rot
    phase_end = drive_phase_at_start + detuning * duration
    frame_out = np.diag([1.0, np.exp(1j * phase_end)]).astype(complex)
    frame_in = np.diag([1.0, np.exp(-1j * drive_phase_at_start)]).astype(complex)
    return frame_out @ u_rot @ frame_in


def rabi_population(omega: float, detuning: float, duration: float) -> float:
    """Excited-state population (omega^2/gen^2) sin^2(gen*t/2) from the lower state."""
    gen = math.hypot(omega, detuning)
    if gen == 0.0:
        return 0.0
    return (omega / gen) ** 2 * math.sin(0.5 * gen * duration) ** 2


@dataclass(frozen=True)
class GateMatrix:
    """Diagonal of the realized gate on (|00>, |01>, |10>, |11>)."""

    a: complex
    b: complex
    c: complex

    def __post_init__(self):
        for name, value in (("a", self.a), ("b", self.b), ("c", self.c)):
            if abs(value) > 1.0 + 1e-9:
                raise DomainError(f"|{name}| = {abs(value)!r} exceeds 1: not norm-preserving")

    def matrix(self) -> np.ndarray:
        return np.diag([1.0, self.a, self.b, self.c]).astype(complex)


@dataclass(frozen=True)
class ErrorBreakdown:
    """Rotation and decay errors with their inputs."""

    e_ro: float
    e_decay: float
    residence_times: tuple  # (T_r(01), T_r(10), T_r(11)) in s
    tau: float  # s

    @property
    def total(self) -> float:
        return self.e_ro + self.e_decay


def extract_gate(final_states: dict) -> GateMatrix:
    """Diagonal gate entries from the four per-input final states.

    a, b are the retained qubit-state amplitudes of the |01> and |10> runs,
    c the |11> amplitude of the two-atom run. The |00> input must be the
    trivial unit state.
    """
    missing = {"00", "01", "10", "11"} - set(final_states)
    if missing:
        raise dynamics.BasisError(f"missing input states: {sorted(missing)}")
    amp00 = final_states["00"].amplitude("00")
    if abs(amp00 - 1.0) > 1e-12:
        raise dynamics.BasisError("the |00> input must stay exactly at |00>")
    return GateMatrix(
        a=final_states["01"].amplitude("g"),
        b=final_states["10"].amplitude("g"),
        c=final_states["11"].amplitude("11"),
    )


def rotation_error(gate: GateMatrix) -> float:
    """Trace-formula rotation error of the realized gate against diag(1,-1,-1,-1)."""
    realized = gate.matrix()
    m = TARGET_GATE.conj().T @ realized
    term1 = abs(np.trace(m)) ** 2
    term2 = float(np.trace(m @ m.conj().T).real)
    return 1.0 - (term1 + term2) / 20.0


def rotation_error_entries(a, b, c):
    """Vectorized rotation error from diagonal entries (same formula as rotation_error)."""
    a = np.asarray(a)
    b = np.asarray(b)
    c = np.asarray(c)
    term1 = np.abs(1.0 - a - b - c) ** 2
    term2 = 1.0 + np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2
    return 1.0 - (term1 + term2) / 20.0


def decay_error(residence_times, tau: float) -> float:
    """Decay error [T_r(01) + T_r(10) + T_r(11)] / (4*tau)."""
    if tau <= 0:
        raise DomainError(f"lifetime must be positive, got {tau}")
    t01, t10, t11 = residence_times
    return (t01 + t10 + t11) / (4.0 * tau)


@dataclass(frozen=True)
class SweepResult:
    """Per-cell rotation errors over a velocity grid plus their thermal average."""

    velocities: np.ndarray  # shared v_c / v_t axis, m/s
    e_ro: np.ndarray  # (n, n), rows indexed by v_c, columns by v_t
    weights: np.ndarray  # (n, n) Maxwell weights G(v_c)*G(v_t)
    average: float
    temperature: float  # K
    protocol_id: str


def _single_atom_amplitudes(segments, velocities, t_gate, oscillation_limit):
    """Final qubit-state amplitude of one atom's sequence for each velocity."""
    velocities = np.asarray(velocities, dtype=float)
    vmax = float(np.max(np.abs(velocities)))
    probe = dynamics.single_atom_model(segments, dynamics.TrajectoryParams(0.0, vmax))
    config = dynamics.suggest_config(probe, oscillation_limit=oscillation_limit)
    packed = dynamics._pack(probe)
    bounds = dynamics._span_bounds(probe, (0.0, t_gate))
    n = velocities.shape[0]
    out = np.empty(n, dtype=complex)
    psi0 = np.zeros(3, dtype=np.complex128)
    psi0[0] = 1.0
    atom_id = int(packed[7][0]) if len(packed[7]) else 0
    half = n // 2 if _is_antisymmetric(velocities) else 0
    sel = np.arange(half, n)
    vc = np.zeros(sel.shape[0])
    vt = np.zeros(sel.shape[0])
    if atom_id == 0:
        vc = velocities[sel]
    else:
        vt = velocities[sel]
    out[sel] = kernel.sweep_final_amplitudes(
        *packed, bounds, config.step_size, vc, vt, psi0, 0
    )
    out[:half] = np.conj(out[n - 1 : n - 1 - half : -1])
    return out


def _is_antisymmetric(velocities) -> bool:
    return bool(np.all(velocities == -velocities[::-1]))


def rotation_error_grid(
    schedule: GateSchedule,
    velocities,
    interactions: InteractionSet,
    oscillation_limit: float = 0.06,
) -> np.ndarray:
    """Rotation error at every (v_c, v_t) grid cell (z0 = 0 for both atoms).

    The single-atom amplitudes obey a(-v) = conj(a(v)) exactly (a drive-free
    diagonal makes velocity reversal a gauged conjugation), so they are
    computed on half the axis. No such shortcut applies to the two-atom run:
    the blockade diagonal keeps its sign under velocity reversal, which
    breaks the conjugation symmetry at finite interaction strength, so every
    (v_c, v_t) cell is integrated explicitly.
    """
    velocities = np.asarray(velocities, dtype=float)
    if velocities.size == 0:
        raise DomainError("velocity grid must not be empty")
    n = velocities.shape[0]
    vmax = float(np.max(np.abs(velocities)))

    a = _single_atom_amplitudes(
        schedule.target_segments, velocities, schedule.t_gate, oscillation_limit
    )
    b = _single_atom_amplitudes(
        schedule.control_segments, velocities, schedule.t_gate, oscillation_limit
    )

    probe = dynamics.two_atom_model(
        schedule,
        dynamics.TrajectoryParams(0.0, vmax),
        dynamics.TrajectoryParams(0.0, vmax),
        interactions,
    )
    config = dynamics.suggest_config(probe, oscillation_limit=oscillation_limit)
    packed = dynamics._pack(probe)
    bounds = dynamics._span_bounds(probe, (0.0, schedule.t_gate))
    psi0 = np.zeros(9, dtype=np.complex128)
    psi0[0] = 1.0

    idx = np.arange(n * n)
    vc_cells = velocities[idx // n]
    vt_cells = velocities[idx % n]
    c = kernel.sweep_final_amplitudes(
        *packed, bounds, config.step_size, vc_cells, vt_cells, psi0, 0
    ).reshape(n, n)

    # rows: v_c (selects b), columns: v_t (selects a)
    return rotation_error_entries(a[np.newaxis, :], b[:, np.newaxis], c)


def weighted_average(e_ro: np.ndarray, velocities, ensemble: ThermalEnsemble):
    """Maxwell-weighted grid average; reduction in fixed row-major order."""
    g = ensemble.weight(np.asarray(velocities, dtype=float))
    weights = np.outer(g, g)
    total = float(np.sum(weights))
    if total == 0.0:
        raise DomainError("all Maxwell weights vanished")
    return float(np.sum(e_ro * weights) / total), weights


def average_rotation_error(
    schedule: GateSchedule,
    ensemble: ThermalEnsemble,
    interactions: InteractionSet,
    oscillation_limit: float = 0.06,
    protocol_id: str = "pipulse",
) -> SweepResult:
    """Thermal average of the rotation error over the ensemble's velocity grid."""
    velocities = ensemble.velocity_grid()
    e_ro = rotation_error_grid(
        schedule, velocities, interactions, oscillation_limit=oscillation_limit
    )
    average, weights = weighted_average(e_ro, velocities, ensemble)
    return SweepResult(
        velocities=velocities,
        e_ro=e_ro,
        weights=weights,
        average=average,
        temperature=ensemble.temperature,
        protocol_id=protocol_id,
    )


def sweep_csv(result: SweepResult) -> str:
    """Per-cell CSV: '#' metadata, v_c,v_t,weight,e_ro rows, trailing summary record."""
    lines = [
        f"# protocol = {result.protocol_id}",
        f"# temperature_K = {result.temperature:.17g}",
        f"# grid_points = {len(result.velocities)}",
        "# units: v_c m/s, v_t m/s, weight s^2/m^2, e_ro dimensionless",
        "v_c,v_t,weight,e_ro",
    ]
    n = len(result.velocities)
    for i in range(n):
        for j in range(n):
            lines.append(
                f"{result.velocities[i]:.17g},{result.velocities[j]:.17g},"
                f"{result.weights[i, j]:.17g},{result.e_ro[i, j]:.17g}"
            )
    lines.append(f"# average_e_ro = {result.average:.17g}")
    return "\n".join(lines) + "\n"


def pi_pulse_scan(omega1: float, k: float, velocities, z0: float = 0.0) -> list[dict]:
    """Population and phase of the Rydberg state after one resonant pi pulse.

    Per velocity: simulated population |<r1|psi(t_pi)>|^2, simulated phase
    arg<r1|psi(t_pi)> + pi/2, the linear prediction k*z0 + k*v*t_pi/2, and
    the drive-quality ratio k*v/Omega1.
    """
    if omega1 <= 0:
        raise DomainError("omega1 must be positive")
    t_pi = math.pi / omega1
    rows = []
    for v in velocities:
        segment = PulseSegment(CONTROL, GROUND_R1, omega1, k, 0.0, t_pi)
        model = dynamics.single_atom_model([segment], dynamics.TrajectoryParams(z0, float(v)))
        config = dynamics.suggest_config(
            model, oscillation_limit=1e-3, drive_phase_limit=2.5e-4
        )
        psi = dynamics.evolve(
            model, dynamics.basis_state(model.labels, "g"), (0.0, t_pi), config
        )
        amp = psi.amplitude("r1")
        rows.append(
            {
                "v": float(v),
                "kv_over_omega1": k * float(v) / omega1,
                "population": abs(amp) ** 2,
                "phase": principal_phase(np.angle(amp) + math.pi / 2.0),
                "predicted_phase": principal_phase(k * z0 + k * float(v) * t_pi / 2.0),
            }
        )
    return rows
