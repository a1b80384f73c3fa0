"""HTTP service wrapping the simulation package.

Each endpoint is a thin pydantic shell around a pure handler function; the
CLI calls the same handlers in-process, so service and command line always
agree. All quantities cross the wire in explicit units: frequencies as
linear MHz (the f in Omega = 2*pi*f), interaction coefficients as
THz*um^6 with the same 2*pi convention, temperatures in K, velocities in
m/s, times in s.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from . import __version__, analytics, atomdata, dynamics, schedule
from .constants import TAU_CRYO_S, TAU_ROOM_S, TWO_PI, mhz_to_rad, rad_to_mhz

DEFAULT_C6_THZ_UM6 = (50.0, 68.0, 56.0)  # (r1r1, r1r2, r2r2)
DEFAULT_SPACING_UM = 8.0


class SchemeTableRequest(BaseModel):
    species: str = "rb87"


class SchemeRow(BaseModel):
    e1: str
    e2: str
    kw_over_k: float
    feasible: bool


class SchemeTableResponse(BaseModel):
    species: str
    rows: list[SchemeRow]


class ProtocolRequest(BaseModel):
    species: str = "rb87"
    e1: str = "5P3/2"
    e2: str = "6P1/2"
    omega1_mhz: float = Field(1.35, gt=0)
    n_control: int = Field(2, ge=1)
    n_target: int = Field(2, ge=2)
    temperatures_k: list[float] = Field(default_factory=lambda: [10e-6, 100e-6, 200e-6])
    kw_over_k_override: float | None = Field(
        None,
        description="Use this wavevector ratio instead of the one derived "
        "from the level data (the exact Rydberg level is a convention).",
    )

    @field_validator("n_target")
    @classmethod
    def _target_loops_even(cls, value: int) -> int:
        # entanglement bookkeeping only works out for an even target loop count
        if value % 2 != 0:
            raise ValueError("the target loop count must be even")
        return value


class TemperatureDiagnostic(BaseModel):
    temperature_k: float
    v_rms: float  # m/s
    kw_vrms_over_omega2: float


class ProtocolResponse(BaseModel):
    species: str
    e1: str
    e2: str
    k_rad_per_m: float
    kw_rad_per_m: float
    kw_over_k: float
    omega1_mhz: float
    omega2_mhz: float
    omega1_prime_mhz: float
    omega2_prime_mhz: float
    t_pi_us: float
    t_wait_us: float
    t_gate_us: float
    diagnostics: list[TemperatureDiagnostic]


class PiScanRequest(BaseModel):
    omega1_mhz: float = Field(1.0, gt=0)
    v_start: float = 0.01
    v_stop: float = 0.2
    v_step: float = Field(0.01, gt=0)
    z0_m: float = 0.0
    species: str = "rb87"
    e1: str = "5P3/2"
    e2: str = "6P1/2"


class PiScanRow(BaseModel):
    v: float
    kv_over_omega1: float
    population: float
    phase: float
    predicted_phase: float


class PiScanResponse(BaseModel):
    omega1_mhz: float
    k_rad_per_m: float
    rows: list[PiScanRow]


class GateErrorRequest(ProtocolRequest):
    protocol: str = Field("pipulse", pattern="^(pipulse|traditional)$")
    grid_points: int = Field(100, ge=1)
    v_max: float = Field(0.5, ge=0)
    spacing_um: float = Field(DEFAULT_SPACING_UM, gt=0)
    c6_thz_um6: tuple[float, float, float] = DEFAULT_C6_THZ_UM6
    oscillation_limit: float = Field(0.06, gt=0, le=0.25)
    include_cells: bool = False


class GateErrorRow(BaseModel):
    temperature_k: float
    e_ro_avg: float
    e_decay_cryo: float
    e_decay_room: float
    e_total_cryo: float
    e_total_room: float


class GateErrorCells(BaseModel):
    velocities: list[float]
    e_ro: list[list[float]]
    weights: list[list[list[float]]]  # one grid per temperature row


class GateErrorResponse(BaseModel):
    protocol: str
    residence_times_us: tuple[float, float, float]  # inputs 01, 10, 11 at v = 0
    tau_cryo_s: float
    tau_room_s: float
    rows: list[GateErrorRow]
    cells: GateErrorCells | None = None


class ServiceError(ValueError):
    """Request cannot be served; message is safe to show the caller."""


def _resolve(req: ProtocolRequest):
    levels = atomdata.load_species(req.species)
    scheme = atomdata.SchemeSelection(req.e1, req.e2)
    scheme.validate(levels)
    pair = atomdata.wavevector_pair(levels, scheme)
    if req.kw_over_k_override is not None:
        pair = atomdata.WavevectorPair(k=pair.k, kw=pair.k * req.kw_over_k_override)
    params = schedule.solve_condition(
        mhz_to_rad(req.omega1_mhz), req.n_control, pair.k, pair.kw
    )
    return levels, pair, params


def handle_scheme_table(req: SchemeTableRequest) -> SchemeTableResponse:
    levels = atomdata.load_species(req.species)
    rows = [
        SchemeRow(e1=e1, e2=e2, kw_over_k=ratio, feasible=feasible)
        for e1, e2, ratio, feasible in atomdata.scheme_table(levels)
    ]
    return SchemeTableResponse(species=req.species, rows=rows)


def handle_protocol_params(req: ProtocolRequest) -> ProtocolResponse:
    levels, pair, params = _resolve(req)
    omega1p, omega2p = schedule.derive_target_rabi(params)
    t_gate = schedule.gate_time(params)
    t_wait = schedule.wait_time(params)
    diagnostics = []
    for temp in req.temperatures_k:
        ens = atomdata.ThermalEnsemble(temp, levels.atomic_mass)
        diagnostics.append(
            TemperatureDiagnostic(
                temperature_k=temp,
                v_rms=ens.v_rms,
                kw_vrms_over_omega2=pair.kw * ens.v_rms / params.omega2,
            )
        )
    return ProtocolResponse(
        species=req.species,
        e1=req.e1,
        e2=req.e2,
        k_rad_per_m=pair.k,
        kw_rad_per_m=pair.kw,
        kw_over_k=pair.ratio,
        omega1_mhz=rad_to_mhz(params.omega1),
        omega2_mhz=rad_to_mhz(params.omega2),
        omega1_prime_mhz=rad_to_mhz(omega1p),
        omega2_prime_mhz=rad_to_mhz(omega2p),
        t_pi_us=1e6 * math.pi / params.omega1,
        t_wait_us=1e6 * t_wait,
        t_gate_us=1e6 * t_gate,
        diagnostics=diagnostics,
    )


def handle_pi_scan(req: PiScanRequest) -> PiScanResponse:
    levels = atomdata.load_species(req.species)
    pair = atomdata.wavevector_pair(levels, atomdata.SchemeSelection(req.e1, req.e2))
    n = int(round((req.v_stop - req.v_start) / req.v_step)) + 1
    if n < 1:
        raise ServiceError("empty velocity scan")
    velocities = [req.v_start + i * req.v_step for i in range(n)]
    rows = analytics.pi_pulse_scan(
        mhz_to_rad(req.omega1_mhz), pair.k, velocities, z0=req.z0_m
    )
    return PiScanResponse(
        omega1_mhz=req.omega1_mhz,
        k_rad_per_m=pair.k,
        rows=[PiScanRow(**row) for row in rows],
    )


def build_protocol_schedule(req: GateErrorRequest):
    """Schedule + interaction set for the requested protocol."""
    levels, pair, params = _resolve(req)
    c6_rad = tuple(TWO_PI * c * 1e12 for c in req.c6_thz_um6)
    interactions = atomdata.vdw_interactions(c6_rad, req.spacing_um)
    gate = schedule.build_gate_schedule(params, n_target=req.n_target)
    if req.protocol == "pipulse":
        return levels, gate, interactions
    # comparator: one Rydberg level only, blockade equal to the r2r2 shift
    trad = schedule.build_traditional_schedule(params.omega1, gate.t_wait, pair.k)
    trad_inter = atomdata.InteractionSet(
        v11=interactions.v22, v12=0.0, v22=0.0,
        c6_11=interactions.c6_22, c6_12=0.0, c6_22=0.0,
        spacing_l=req.spacing_um,
    )
    return levels, trad, trad_inter


def handle_gate_error(req: GateErrorRequest) -> GateErrorResponse:
    levels, gate, interactions = build_protocol_schedule(req)
    if not req.temperatures_k:
        raise ServiceError("at least one temperature is required")

    still = dynamics.TrajectoryParams(0.0, 0.0)
    residences = []
    for label in ("01", "10", "11"):
        _, res = dynamics.simulate_input(label, gate, still, still, interactions)
        residences.append(res)
    e_decay_cryo = analytics.decay_error(residences, TAU_CRYO_S)
    e_decay_room = analytics.decay_error(residences, TAU_ROOM_S)

    grid_ens = atomdata.ThermalEnsemble(
        req.temperatures_k[0], levels.atomic_mass,
        grid_points=req.grid_points, v_max=req.v_max,
    )
    velocities = grid_ens.velocity_grid()
    e_ro = analytics.rotation_error_grid(
        gate, velocities, interactions, oscillation_limit=req.oscillation_limit
    )

    rows = []
    weight_grids = []
    for temp in req.temperatures_k:
        ens = atomdata.ThermalEnsemble(
            temp, levels.atomic_mass, grid_points=req.grid_points, v_max=req.v_max
        )
        avg, weights = analytics.weighted_average(e_ro, velocities, ens)
        rows.append(
            GateErrorRow(
                temperature_k=temp,
                e_ro_avg=avg,
                e_decay_cryo=e_decay_cryo,
                e_decay_room=e_decay_room,
                e_total_cryo=avg + e_decay_cryo,
                e_total_room=avg + e_decay_room,
            )
        )
        weight_grids.append(weights.tolist())

    cells = None
    if req.include_cells:
        cells = GateErrorCells(
            velocities=velocities.tolist(), e_ro=e_ro.tolist(), weights=weight_grids
        )
    return GateErrorResponse(
        protocol=req.protocol,
        residence_times_us=tuple(1e6 * r for r in residences),
        tau_cryo_s=TAU_CRYO_S,
        tau_room_s=TAU_ROOM_S,
        rows=rows,
        cells=cells,
    )


app = FastAPI(
    title="rydoppler",
    version=__version__,
    description="Doppler-robust Rydberg pulse protocols: scheme tables, "
    "pulse-sequence parameters, single-pulse scans, and blockade-gate "
    "error sweeps.",
)

_CLIENT_ERRORS = (
    atomdata.UnknownSpeciesError,
    atomdata.UnknownLevelError,
    atomdata.InfeasibleSchemeError,
    atomdata.DomainError,
    schedule.ScheduleError,
    ServiceError,
)


def _guard(handler, request):
    try:
        return handler(request)
    except _CLIENT_ERRORS as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/scheme-table")
def scheme_table_endpoint(req: SchemeTableRequest) -> SchemeTableResponse:
    return _guard(handle_scheme_table, req)


@app.post("/protocol-params")
def protocol_params_endpoint(req: ProtocolRequest) -> ProtocolResponse:
    return _guard(handle_protocol_params, req)


@app.post("/fig2-scan")
def fig2_scan_endpoint(req: PiScanRequest) -> PiScanResponse:
    return _guard(handle_pi_scan, req)


@app.post("/gate-error")
def gate_error_endpoint(req: GateErrorRequest) -> GateErrorResponse:
    return _guard(handle_gate_error, req)
