"""Time-dependent Hamiltonians and Schroedinger evolution.

Single-atom dynamics run on the labeled basis (g, r1, r2); the two-atom
blockade gate runs on the nine product states reachable from |11> (each
atom in 1, r1 or r2). Drive matrix elements follow the convention that the
upper state of a transition carries the positive drive phase:

    <r1|H|g>  = (Omega1/2) * exp(i*k   *(z0 + v*t))       ground_r1 segments
    <r1|H|r2> = (Omega2/2) * exp(i*k_w *(z0 + v*t))       r1_r2 segments

and the double-Rydberg states carry constant van der Waals shifts on the
diagonal. Integration is fixed-step 4th order with segment boundaries
aligned to step edges (see kernel module); the constant diagonal is
propagated exactly, so the step-size budget applies to the drive part of
the generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernel
from .atomdata import InteractionSet, ZERO_INTERACTIONS
from .schedule import CONTROL, GROUND_R1, R1_R2, TARGET, GateSchedule, PulseSegment

SINGLE_ATOM_BASIS = ("g", "r1", "r2")

# two-atom basis: (control state, target state), states reachable from |11>
TWO_ATOM_BASIS = ("11", "r1 1", "r2 1", "1 r1", "1 r2", "r1r1", "r1r2", "r2r1", "r2r2")

# index pairs (row carries the +phase) per atom and transition
_PAIRS_SINGLE = {GROUND_R1: ((1, 0),), R1_R2: ((1, 2),)}
_PAIRS_TWO = {
    (CONTROL, GROUND_R1): ((1, 0), (5, 3), (6, 4)),
    (CONTROL, R1_R2): ((1, 2), (5, 7), (6, 8)),
    (TARGET, GROUND_R1): ((3, 0), (5, 1), (7, 2)),
    (TARGET, R1_R2): ((3, 4), (5, 6), (7, 8)),
}

# single-Rydberg states for residence-time accounting (double-Rydberg excluded)
_RYD_MASK_SINGLE = np.array([0.0, 1.0, 1.0])
_RYD_MASK_TWO = np.array([0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0])

_DRIVE_PHASE_LIMIT = 1e-3  # max phase advance of the integrated generator per step, rad


class ConfigurationError(ValueError):
    """Integrator configuration violates the step-size contract."""


class BasisError(ValueError):
    """State vectors refer to incompatible bases."""


@dataclass(frozen=True)
class TrajectoryParams:
    """Constant 1-D drift along the beam axis: z(t) = z0 + v*t."""

    z0: float = 0.0  # m
    v: float = 0.0  # m/s


@dataclass(frozen=True)
class DriveTerm:
    """One off-diagonal coupling H[row,col] = (omega/2)*exp(i*k*(z0+v*t)) on [t_start, t_end)."""

    row: int
    col: int
    omega: float  # rad/s
    wavevector: float  # rad/m
    z0: float  # m
    velocity: float  # m/s
    atom: int  # 0 control / 1 target, used by the sweep to rebind velocities
    t_start: float  # s
    t_end: float  # s


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over a labeled basis."""

    labels: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if len(self.labels) != amps.shape[0]:
            raise BasisError("label/amplitude length mismatch")
        if abs(self.norm - 1.0) > 1e-6:
            raise BasisError(f"state vector not normalized: |psi| = {self.norm!r}")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(np.asarray(self.amplitudes, dtype=complex)))

    def amplitude(self, label: str) -> complex:
        try:
            return complex(self.amplitudes[self.labels.index(label)])
        except ValueError:
            raise BasisError(f"label {label!r} not in basis {self.labels}") from None

    def population(self, label: str) -> float:
        return abs(self.amplitude(label)) ** 2


def basis_state(labels: tuple, label: str) -> StateVector:
    amps = np.zeros(len(labels), dtype=complex)
    amps[labels.index(label)] = 1.0
    return StateVector(labels, amps)


@dataclass(frozen=True)
class HamiltonianModel:
    """Hermitian generator H(t) = sum of drive terms + constant diagonal, rad/s."""

    labels: tuple
    diagonal: np.ndarray
    terms: tuple
    ryd_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "diagonal", np.asarray(self.diagonal, dtype=float))
        if self.ryd_mask is None:
            if self.dimension == 3:
                mask = _RYD_MASK_SINGLE
            elif self.dimension == 9:
                mask = _RYD_MASK_TWO
            else:
                mask = np.zeros(self.dimension)
            object.__setattr__(self, "ryd_mask", mask)

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def boundaries(self) -> np.ndarray:
        times = {0.0}
        for t in self.terms:
            times.add(t.t_start)
            times.add(t.t_end)
        return np.array(sorted(times))

    def matrix(self, t: float) -> np.ndarray:
        """Lab-frame Hamiltonian matrix at time t."""
        h = np.diag(self.diagonal.astype(complex))
        for term in self.terms:
            if term.t_start <= t < term.t_end:
                elem = 0.5 * term.omega * np.exp(
                    1j * term.wavevector * (term.z0 + term.velocity * t)
                )
                h[term.row, term.col] += elem
                h[term.col, term.row] += np.conj(elem)
        return h

    def drive_norm_bound(self) -> float:
        """Max over inter-boundary intervals of the drive-part norm bound sum(|Omega|/2)."""
        bounds = self.boundaries()
        worst = 0.0
        for ta, tb in zip(bounds, bounds[1:]):
            mid = 0.5 * (ta + tb)
            total = sum(0.5 * t.omega for t in self.terms if t.t_start <= mid < t.t_end)
            worst = max(worst, total)
        return worst

    def max_phase_rate(self) -> float:
        """Fastest element oscillation rate |k*v + D_row - D_col| over all terms."""
        rate = 0.0
        for t in self.terms:
            d = self.diagonal[t.row] - self.diagonal[t.col]
            rate = max(rate, abs(t.wavevector * t.velocity + d))
        return rate


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step 4th-order integration parameters.

    `step_size` must keep the per-step phase advance of the integrated
    (interaction-picture) generator at or below 1e-3 rad; `evolve` rejects
    configurations that violate this. `richardson_check` repeats the run at
    half step and raises if final amplitudes move by more than
    `richardson_tol`.
    """

    step_size: float
    method: str = "rk4"
    richardson_check: bool = False
    richardson_tol: float = 1e-9

    def __post_init__(self):
        if self.method != "rk4":
            raise ConfigurationError(f"unsupported method {self.method!r}")
        if self.step_size <= 0:
            raise ConfigurationError("step size must be positive")

    def halved(self) -> "IntegratorConfig":
        return replace(self, step_size=self.step_size / 2.0, richardson_check=False)


def suggest_config(
    model: HamiltonianModel,
    oscillation_limit: float = 5e-3,
    drive_phase_limit: float = _DRIVE_PHASE_LIMIT,
    **kwargs,
) -> IntegratorConfig:
    """Step size from the drive-norm budget, element oscillation rates, and boundaries.

    The drive budget enforces step * ||H_drive|| <= 1e-3 rad (tighter on
    request). The oscillation limit bounds the phase swing of the fastest
    rotating matrix element per step, which controls the truncation error
    when large interaction shifts are present (tighten it for high-accuracy
    runs, relax to ~0.05 for bulk sweeps). Steps never exceed 1/100 of the
    shortest inter-boundary interval.
    """
    step = 1.0  # cap for drive-free models, s
    drive = model.drive_norm_bound()
    if drive > 0:
        step = min(step, min(drive_phase_limit, _DRIVE_PHASE_LIMIT) / drive)
    rate = model.max_phase_rate()
    if rate > 0:
        step = min(step, oscillation_limit / rate)
    bounds = model.boundaries()
    gaps = [tb - ta for ta, tb in zip(bounds, bounds[1:]) if tb > ta]
    if gaps:
        step = min(step, min(gaps) / 100.0)
    return IntegratorConfig(step_size=step, **kwargs)


def _segment_terms(segment: PulseSegment, traj: TrajectoryParams, two_atom: bool) -> list:
    atom_id = 0 if segment.atom == CONTROL else 1
    pairs = (
        _PAIRS_TWO[(segment.atom, segment.transition)]
        if two_atom
        else _PAIRS_SINGLE[segment.transition]
    )
    return [
        DriveTerm(
            row=r,
            col=c,
            omega=segment.rabi_magnitude,
            wavevector=segment.wavevector,
            z0=traj.z0,
            velocity=traj.v,
            atom=atom_id,
            t_start=segment.t_start,
            t_end=segment.t_end,
        )
        for r, c in pairs
    ]


def single_segment_hamiltonian(
    segment: PulseSegment, traj: TrajectoryParams, t: float
) -> np.ndarray:
    """3x3 contribution of one drive segment at time t (zero outside the segment)."""
    model = HamiltonianModel(
        SINGLE_ATOM_BASIS, np.zeros(3), tuple(_segment_terms(segment, traj, False))
    )
    return model.matrix(t)


def single_atom_model(segments, traj: TrajectoryParams) -> HamiltonianModel:
    """Three-level model (g, r1, r2) for one atom's drive segments."""
    terms = []
    for seg in segments:
        terms.extend(_segment_terms(seg, traj, False))
    return HamiltonianModel(SINGLE_ATOM_BASIS, np.zeros(3), tuple(terms))


def two_atom_model(
    schedule: GateSchedule,
    traj_control: TrajectoryParams,
    traj_target: TrajectoryParams,
    interactions: InteractionSet,
) -> HamiltonianModel:
    """Nine-state model for the |11> input of the blockade gate."""
    diag = np.zeros(9)
    diag[5] = interactions.v11
    diag[6] = interactions.v12
    diag[7] = interactions.v12
    diag[8] = interactions.v22
    terms = []
    for seg in schedule.control_segments:
        terms.extend(_segment_terms(seg, traj_control, True))
    for seg in schedule.target_segments:
        terms.extend(_segment_terms(seg, traj_target, True))
    return HamiltonianModel(TWO_ATOM_BASIS, diag, tuple(terms))


def two_atom_hamiltonian(
    schedule: GateSchedule,
    traj_control: TrajectoryParams,
    traj_target: TrajectoryParams,
    interactions: InteractionSet,
    t: float,
) -> np.ndarray:
    """Lab-frame 9x9 Hamiltonian of the blockade gate at time t."""
    return two_atom_model(schedule, traj_control, traj_target, interactions).matrix(t)


def _pack(model: HamiltonianModel):
    terms = model.terms
    return (
        model.dimension,
        np.ascontiguousarray(model.diagonal, dtype=np.float64),
        np.array([t.row for t in terms], dtype=np.int64),
        np.array([t.col for t in terms], dtype=np.int64),
        np.array([0.5 * t.omega for t in terms], dtype=np.float64),
        np.array([t.wavevector for t in terms], dtype=np.float64),
        np.array([t.z0 for t in terms], dtype=np.float64),
        np.array([t.atom for t in terms], dtype=np.int64),
        np.array([t.t_start for t in terms], dtype=np.float64),
        np.array([t.t_end for t in terms], dtype=np.float64),
    )


def _span_bounds(model: HamiltonianModel, t_span) -> np.ndarray:
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise ConfigurationError("t_span end precedes start")
    inner = [b for b in model.boundaries() if t0 < b < t1]
    return np.array([t0] + inner + [t1])


def _integrate(model, psi0, t_span, config):
    (dim, diag, rows, cols, half_om, kvec, z0s, atoms, ts, te) = _pack(model)
    v_by_atom = {0: None, 1: None}
    for t in model.terms:
        if v_by_atom[t.atom] is None:
            v_by_atom[t.atom] = t.velocity
        elif v_by_atom[t.atom] != t.velocity:
            raise ConfigurationError("all terms of one atom must share a velocity")
    bounds = _span_bounds(model, t_span)
    vc = v_by_atom[0] if v_by_atom[0] is not None else 0.0
    vt = v_by_atom[1] if v_by_atom[1] is not None else 0.0
    psi, residence = kernel._rk4_core(
        dim, diag, rows, cols, half_om, kvec, z0s, atoms, ts, te,
        bounds, config.step_size, vc, vt,
        np.ascontiguousarray(psi0, dtype=np.complex128),
        np.ascontiguousarray(model.ryd_mask, dtype=np.float64),
    )
    return psi, residence


def evolve(
    model: HamiltonianModel,
    psi0: StateVector,
    t_span: tuple,
    config: IntegratorConfig,
) -> StateVector:
    """Propagate psi0 over t_span under the model's Hamiltonian.

    Deterministic for a fixed configuration. Raises ConfigurationError when
    the step size exceeds the 1e-3 rad drive-phase budget.
    """
    if psi0.labels != model.labels:
        raise BasisError("state basis does not match model basis")
    if config.step_size * model.drive_norm_bound() > _DRIVE_PHASE_LIMIT * (1 + 1e-9):
        raise ConfigurationError(
            f"step {config.step_size!r} s exceeds the {_DRIVE_PHASE_LIMIT} rad "
            "per-step drive-phase budget for this model"
        )
    psi, _ = _integrate(model, psi0.amplitudes, t_span, config)
    if config.richardson_check:
        psi_half, _ = _integrate(model, psi0.amplitudes, t_span, config.halved())
        err = float(np.max(np.abs(psi - psi_half)))
        if err > config.richardson_tol:
            raise ConfigurationError(
                f"step-halving check failed: amplitudes moved by {err!r} "
                f"(tolerance {config.richardson_tol!r})"
            )
    return StateVector(model.labels, psi)


def evolve_reference(
    model: HamiltonianModel, psi0: np.ndarray, t_span: tuple, step_size: float
) -> np.ndarray:
    """Plain lab-frame RK4 on the assembled matrix; slow cross-check path.

    Independent of the compiled kernel and of the interaction-picture
    transformation: it integrates i dpsi/dt = H(t) psi directly with the
    full matrix at every stage.
    """
    bounds = _span_bounds(model, t_span)
    psi = np.asarray(psi0, dtype=complex).copy()
    for ta, tb in zip(bounds, bounds[1:]):
        if tb <= ta:
            continue
        # terms active throughout this interval; stage evaluations at the
        # right edge must still see this interval's drive, not the next one's
        active = [t for t in model.terms if t.t_start <= ta and t.t_end >= tb]

        def h_at(tt):
            h = np.diag(model.diagonal.astype(complex))
            for term in active:
                elem = 0.5 * term.omega * np.exp(
                    1j * term.wavevector * (term.z0 + term.velocity * tt)
                )
                h[term.row, term.col] += elem
                h[term.col, term.row] += np.conj(elem)
            return h

        n = max(1, int(math.ceil((tb - ta) / step_size)))
        h = (tb - ta) / n
        for i in range(n):
            t = ta + i * h
            k1 = -1j * (h_at(t) @ psi)
            k2 = -1j * (h_at(t + h / 2) @ (psi + h / 2 * k1))
            k3 = -1j * (h_at(t + h / 2) @ (psi + h / 2 * k2))
            k4 = -1j * (h_at(t + h) @ (psi + h * k3))
            psi = psi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def simulate_input(
    input_label: str,
    schedule: GateSchedule,
    traj_control: TrajectoryParams,
    traj_target: TrajectoryParams,
    interactions: InteractionSet = ZERO_INTERACTIONS,
    config: IntegratorConfig | None = None,
    oscillation_limit: float = 5e-3,
) -> tuple[StateVector, float]:
    """Run one computational-basis input through the gate.

    |00> is untouched (lasers do not address |0>); |01> and |10> evolve the
    driven atom's three-level dynamics; |11> evolves the nine-state
    two-atom dynamics. Returns the final state and the accumulated
    single-Rydberg residence time (double-Rydberg residence excluded).
    """
    if input_label == "00":
        return StateVector(("00",), np.array([1.0 + 0.0j])), 0.0
    if input_label == "01":
        model = single_atom_model(schedule.target_segments, traj_target)
    elif input_label == "10":
        model = single_atom_model(schedule.control_segments, traj_control)
    elif input_label == "11":
        model = two_atom_model(schedule, traj_control, traj_target, interactions)
    else:
        raise ValueError(f"unknown input label {input_label!r}")
    if config is None:
        config = suggest_config(model, oscillation_limit=oscillation_limit)
    start_label = "g" if model.dimension == 3 else "11"
    psi0 = basis_state(model.labels, start_label)
    if config.step_size * model.drive_norm_bound() > _DRIVE_PHASE_LIMIT * (1 + 1e-9):
        raise ConfigurationError("step size exceeds the drive-phase budget")
    psi, residence = _integrate(model, psi0.amplitudes, (0.0, schedule.t_gate), config)
    return StateVector(model.labels, psi), residence
