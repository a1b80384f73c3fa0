"""Command-line client for the rydoppler service handlers.

The CLI is a thin client: every subcommand builds the same pydantic request
the HTTP API accepts, executes it (in-process by default, or against a
running server via --server), and formats the response as CSV or JSON.

Units at this boundary: frequencies are entered as linear MHz (the f in
Omega = 2*pi*f) and converted to rad/s exactly once inside the core;
interaction coefficients are THz*um^6 with the same 2*pi convention;
temperatures are K in config files and micro-Kelvin on the --temp-uk flag;
velocities m/s; distances um.

CSV output uses '#'-prefixed metadata lines, comma separators, LF line
endings and 17-significant-digit floats. JSON output mirrors the same rows
with an explicit `units` object. Identical configuration yields
byte-identical output.
"""

from __future__ import annotations

import configparser
import json
import sys
from dataclasses import dataclass, fields

import click

from . import analytics, atomdata, schedule, service
from .atomdata import ThermalEnsemble

_EXIT_BAD_INPUT = 2


@dataclass
class RunConfig:
    """Mirror of the config-file schema; CLI flags override file values."""

    species: str = "rb87"
    e1: str = "5P3/2"
    e2: str = "6P1/2"
    omega1_mhz: float = 1.35
    n_control: int = 2
    n_target: int = 2
    temperatures_k: tuple = (10e-6, 100e-6, 200e-6)
    grid_points: int = 100
    v_max: float = 0.5
    spacing_um: float = 8.0
    c6_thz_um6: tuple = service.DEFAULT_C6_THZ_UM6
    protocol: str = "pipulse"
    format: str = "csv"
    out: str | None = None
    kw_over_k: float | None = None
    oscillation_limit: float = 0.06

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        parser.optionxform = str
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
        section = parser["run"] if "run" in parser else parser[parser.sections()[0]]
        kwargs = {}
        for f in fields(cls):
            if f.name not in section:
                continue
            raw = section[f.name].strip()
            if f.name in ("temperatures_k", "c6_thz_um6"):
                kwargs[f.name] = tuple(float(x) for x in raw.split(","))
            elif f.name in ("n_control", "n_target", "grid_points"):
                kwargs[f.name] = int(raw)
            elif f.name in ("omega1_mhz", "v_max", "spacing_um", "kw_over_k", "oscillation_limit"):
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = raw
        return cls(**kwargs)

    def merged(self, **overrides) -> "RunConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(**values)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _csv_text(metadata: list, header: list, rows: list) -> str:
    lines = [f"# {m}" for m in metadata]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _json_text(units: dict, header: list, rows: list, extra: dict | None = None) -> str:
    payload = {"units": units, "rows": [dict(zip(header, row)) for row in rows]}
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _abort(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(_EXIT_BAD_INPUT)


def _call(handler, request, server: str | None, path: str, response_model):
    """Run a request in-process or against a remote service."""
    if server is None:
        try:
            return handler(request)
        except service._CLIENT_ERRORS as exc:
            _abort(str(exc))
    import httpx

    reply = httpx.post(
        server.rstrip("/") + path, json=request.model_dump(), timeout=3600.0
    )
    if reply.status_code != 200:
        _abort(f"server returned {reply.status_code}: {reply.text}")
    return response_model.model_validate(reply.json())


def _load_config(config_path: str | None) -> RunConfig:
    if config_path is None:
        return RunConfig()
    try:
        return RunConfig.from_file(config_path)
    except (OSError, KeyError, ValueError, configparser.Error) as exc:
        _abort(f"cannot read config {config_path}: {exc}")


def common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="INI run configuration; flags override it.")(fn)
    fn = click.option("--out", default=None, help="Output file (default: stdout).")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
                      default=None, help="Output format (default csv).")(fn)
    fn = click.option("--server", default=None, metavar="URL",
                      help="POST to a running rydoppler service instead of computing in-process.")(fn)
    return fn


@click.group()
def main():
    """Doppler-robust Rydberg pulse protocols: tables, scans and error sweeps."""


@main.command("scheme-table")
@click.option("--species", default=None, help="Species section in the atomic data file.")
@common_options
def scheme_table_cmd(species, config_path, out, fmt, server):
    """Wavevector ratios k_w/k for the stored intermediate-state choices."""
    cfg = _load_config(config_path).merged(species=species, format=fmt, out=out)
    req = service.SchemeTableRequest(species=cfg.species)
    resp = _call(service.handle_scheme_table, req, server, "/scheme-table",
                 service.SchemeTableResponse)
    header = ["e1", "e2", "kw_over_k", "feasible"]
    rows = [[r.e1, r.e2, r.kw_over_k, r.feasible] for r in resp.rows]
    units = {"kw_over_k": "dimensionless"}
    if cfg.format == "json":
        text = _json_text(units, header, rows, {"species": resp.species})
    else:
        text = _csv_text(
            [f"species = {resp.species}", "kw_over_k is dimensionless"], header, rows
        )
    _emit(text, cfg.out)


@main.command("fig2-scan")
@click.option("--omega1-mhz", type=float, default=None,
              help="Drive magnitude Omega1/2pi in MHz.")
@click.option("--vmin", type=float, default=0.01, show_default=True, help="First velocity, m/s.")
@click.option("--vmax", "vstop", type=float, default=0.2, show_default=True, help="Last velocity, m/s.")
@click.option("--vstep", type=float, default=0.01, show_default=True, help="Velocity step, m/s.")
@click.option("--z0", type=float, default=0.0, show_default=True, help="Initial coordinate, m.")
@click.option("--species", default=None)
@click.option("--e1", default=None, help="Intermediate state of the ground-Rydberg drive.")
@common_options
def fig2_scan_cmd(omega1_mhz, vmin, vstop, vstep, z0, species, e1, config_path, out, fmt, server):
    """Rydberg population and phase after one resonant pi pulse, per velocity."""
    cfg = _load_config(config_path).merged(
        species=species, e1=e1, omega1_mhz=omega1_mhz, format=fmt, out=out
    )
    req = service.PiScanRequest(
        omega1_mhz=cfg.omega1_mhz, v_start=vmin, v_stop=vstop, v_step=vstep,
        z0_m=z0, species=cfg.species, e1=cfg.e1, e2=cfg.e2,
    )
    resp = _call(service.handle_pi_scan, req, server, "/fig2-scan", service.PiScanResponse)
    header = ["v", "kv_over_omega1", "population", "phase", "predicted_phase"]
    rows = [[r.v, r.kv_over_omega1, r.population, r.phase, r.predicted_phase]
            for r in resp.rows]
    units = {"v": "m/s", "kv_over_omega1": "dimensionless", "population": "dimensionless",
             "phase": "rad", "predicted_phase": "rad"}
    meta = [
        f"omega1_mhz = {_fmt(resp.omega1_mhz)}",
        f"k_rad_per_m = {_fmt(resp.k_rad_per_m)}",
        "phase columns: arg<r1|psi(t_pi)> + pi/2 and the linear prediction "
        "k*z0 + k*v*t_pi/2, both wrapped to (-pi, pi]",
        "units: v m/s, phases rad",
    ]
    if cfg.format == "json":
        text = _json_text(units, header, rows,
                          {"omega1_mhz": resp.omega1_mhz, "k_rad_per_m": resp.k_rad_per_m})
    else:
        text = _csv_text(meta, header, rows)
    _emit(text, cfg.out)


@main.command("protocol-params")
@click.option("--species", default=None)
@click.option("--e1", default=None)
@click.option("--e2", default=None)
@click.option("--omega1-mhz", type=float, default=None, help="Omega1/2pi in MHz.")
@click.option("--n-control", type=int, default=None, help="Control-atom loop count N.")
@click.option("--n-target", type=int, default=None, help="Target-atom loop count N' (even).")
@click.option("--temp-uk", default=None, help="Comma-separated temperatures in micro-K.")
@click.option("--kw-over-k", type=float, default=None,
              help="Override the data-file wavevector ratio.")
@common_options
def protocol_params_cmd(species, e1, e2, omega1_mhz, n_control, n_target, temp_uk,
                        kw_over_k, config_path, out, fmt, server):
    """Derived Rabi set, gate timing and thermal diagnostics for the protocol."""
    cfg = _load_config(config_path).merged(
        species=species, e1=e1, e2=e2, omega1_mhz=omega1_mhz,
        n_control=n_control, n_target=n_target, format=fmt, out=out,
        kw_over_k=kw_over_k,
        temperatures_k=_parse_temps(temp_uk),
    )
    req = service.ProtocolRequest(
        species=cfg.species, e1=cfg.e1, e2=cfg.e2, omega1_mhz=cfg.omega1_mhz,
        n_control=cfg.n_control, n_target=cfg.n_target,
        temperatures_k=list(cfg.temperatures_k), kw_over_k_override=cfg.kw_over_k,
    )
    resp = _call(service.handle_protocol_params, req, server, "/protocol-params",
                 service.ProtocolResponse)
    header = ["name", "value"]
    rows = [
        ["species", resp.species], ["e1", resp.e1], ["e2", resp.e2],
        ["k_rad_per_m", resp.k_rad_per_m], ["kw_rad_per_m", resp.kw_rad_per_m],
        ["kw_over_k", resp.kw_over_k],
        ["omega1_mhz", resp.omega1_mhz], ["omega2_mhz", resp.omega2_mhz],
        ["omega1_prime_mhz", resp.omega1_prime_mhz],
        ["omega2_prime_mhz", resp.omega2_prime_mhz],
        ["t_pi_us", resp.t_pi_us], ["t_wait_us", resp.t_wait_us],
        ["t_gate_us", resp.t_gate_us],
    ]
    for diag in resp.diagnostics:
        rows.append([f"v_rms[{diag.temperature_k:g}K]", diag.v_rms])
        rows.append([f"kw_vrms_over_omega2[{diag.temperature_k:g}K]", diag.kw_vrms_over_omega2])
    units = {"omega*": "MHz (/2pi)", "t_*": "us", "k*": "rad/m", "v_rms": "m/s"}
    if cfg.format == "json":
        text = _json_text(units, header, rows)
    else:
        text = _csv_text(
            ["units: omega* MHz (/2pi); t_* us; k* rad/m; v_rms m/s"], header, rows
        )
    _emit(text, cfg.out)


@main.command("gate-error")
@click.option("--species", default=None)
@click.option("--e1", default=None)
@click.option("--e2", default=None)
@click.option("--omega1-mhz", type=float, default=None)
@click.option("--temp-uk", default=None, help="Comma-separated temperatures in micro-K.")
@click.option("--protocol", type=click.Choice(["pipulse", "traditional"]), default=None)
@click.option("--grid", "grid_points", type=int, default=None,
              help="Velocity grid points per axis.")
@click.option("--vmax", type=float, default=None, help="Velocity grid half-width, m/s.")
@click.option("--spacing-um", type=float, default=None, help="Qubit spacing L, um.")
@click.option("--c6", default=None,
              help="C6(r1r1),C6(r1r2),C6(r2r2) in THz*um^6 (/2pi), comma separated.")
@click.option("--osc-limit", type=float, default=None,
              help="Integrator oscillation budget per step (advanced).")
@click.option("--cells-out", default=None, metavar="PREFIX",
              help="Also write per-cell sweep CSVs to PREFIX-<T>uK.csv.")
@click.option("--kw-over-k", type=float, default=None)
@common_options
def gate_error_cmd(species, e1, e2, omega1_mhz, temp_uk, protocol, grid_points, vmax,
                   spacing_um, c6, osc_limit, cells_out, kw_over_k,
                   config_path, out, fmt, server):
    """Thermally averaged rotation error and decay error of the blockade gate."""
    cfg = _load_config(config_path).merged(
        species=species, e1=e1, e2=e2, omega1_mhz=omega1_mhz,
        protocol=protocol, grid_points=grid_points, v_max=vmax,
        spacing_um=spacing_um, format=fmt, out=out, kw_over_k=kw_over_k,
        oscillation_limit=osc_limit,
        temperatures_k=_parse_temps(temp_uk),
        c6_thz_um6=_parse_triple(c6),
    )
    req = service.GateErrorRequest(
        species=cfg.species, e1=cfg.e1, e2=cfg.e2, omega1_mhz=cfg.omega1_mhz,
        n_control=cfg.n_control, n_target=cfg.n_target,
        temperatures_k=list(cfg.temperatures_k), kw_over_k_override=cfg.kw_over_k,
        protocol=cfg.protocol, grid_points=cfg.grid_points, v_max=cfg.v_max,
        spacing_um=cfg.spacing_um, c6_thz_um6=cfg.c6_thz_um6,
        oscillation_limit=cfg.oscillation_limit,
        include_cells=cells_out is not None,
    )
    resp = _call(service.handle_gate_error, req, server, "/gate-error",
                 service.GateErrorResponse)
    header = ["protocol", "temperature_k", "e_ro_avg", "e_decay_cryo", "e_decay_room",
              "e_total_cryo", "e_total_room"]
    rows = [[resp.protocol, r.temperature_k, r.e_ro_avg, r.e_decay_cryo, r.e_decay_room,
             r.e_total_cryo, r.e_total_room] for r in resp.rows]
    t01, t10, t11 = resp.residence_times_us
    meta = [
        "units: temperature K, errors dimensionless",
        f"residence_us_01 = {_fmt(t01)}",
        f"residence_us_10 = {_fmt(t10)}",
        f"residence_us_11 = {_fmt(t11)}",
        f"tau_cryo_s = {_fmt(resp.tau_cryo_s)}",
        f"tau_room_s = {_fmt(resp.tau_room_s)}",
    ]
    units = {"temperature_k": "K", "errors": "dimensionless",
             "residence_times_us": "us", "tau": "s"}
    if cfg.format == "json":
        text = _json_text(units, header, rows, {
            "residence_times_us": list(resp.residence_times_us),
            "tau_cryo_s": resp.tau_cryo_s, "tau_room_s": resp.tau_room_s,
        })
    else:
        text = _csv_text(meta, header, rows)
    _emit(text, cfg.out)
    if cells_out is not None:
        _write_cells(resp, cells_out)


def _write_cells(resp: service.GateErrorResponse, prefix: str) -> None:
    import numpy as np

    cells = resp.cells
    for row, weights in zip(resp.rows, cells.weights):
        result = analytics.SweepResult(
            velocities=np.asarray(cells.velocities),
            e_ro=np.asarray(cells.e_ro),
            weights=np.asarray(weights),
            average=row.e_ro_avg,
            temperature=row.temperature_k,
            protocol_id=resp.protocol,
        )
        path = f"{prefix}-{row.temperature_k * 1e6:g}uK.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(analytics.sweep_csv(result))


def _parse_temps(temp_uk: str | None):
    if temp_uk is None:
        return None
    try:
        return tuple(float(t) * 1e-6 for t in temp_uk.split(","))
    except ValueError:
        _abort(f"cannot parse --temp-uk value {temp_uk!r}")


def _parse_triple(c6: str | None):
    if c6 is None:
        return None
    parts = c6.split(",")
    if len(parts) != 3:
        _abort("--c6 needs exactly three comma-separated values")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        _abort(f"cannot parse --c6 value {c6!r}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("rydoppler.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
