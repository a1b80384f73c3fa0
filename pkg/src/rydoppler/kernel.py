"""Compiled fixed-step integrator core.

The Schroedinger equation is integrated in the interaction picture of the
constant interaction diagonal D: with phi = exp(+i*D*(t-t0)) * psi the
generator has zero diagonal and elements

    H~[r,c] = (Omega/2) * exp(i * (k*z0 + (k*v + D_r - D_c) * t - D_rc*t0)),

i.e. every matrix element is a constant amplitude times a phasor rotating at
a fixed rate. The classical 4th-order Runge-Kutta step advances the state
while the phasors advance by precomputed half-step rotations; they are
resynchronized from sin/cos every few hundred steps to cap rounding drift.
The constant diagonal is restored exactly at the end, so norm drift is set
by the drive magnitudes alone, not by the (much larger) interaction shifts.

Drive segments switch on and off instantly; integration runs
interval-by-interval between segment boundaries so every discontinuity
lands exactly on a step edge.
"""

import numpy as np
import numba
from numba import njit, prange

# the portable threading layer; tbb/omp may be absent or too old
numba.config.THREADING_LAYER = "workqueue"

# steps between exact phasor resynchronizations
_RESYNC = 256


@njit(cache=True, nogil=True)
def _rk4_core(
    dim,
    diag,
    t_row,
    t_col,
    t_half_om,
    t_k,
    t_z0,
    t_atom,
    t_start,
    t_end,
    bounds,
    dt_max,
    v_control,
    v_target,
    psi0,
    ryd_mask,
):
    """Integrate one state over [bounds[0], bounds[-1]].

    Returns (final lab-frame state, time integral of the ryd_mask-weighted
    population). Terms with t_atom == 0 move at v_control, == 1 at v_target.
    """
    nt = t_row.shape[0]
    t_ref = bounds[0]

    y = psi0.astype(np.complex128).copy()
    k1 = np.empty(dim, np.complex128)
    k2 = np.empty(dim, np.complex128)
    k3 = np.empty(dim, np.complex128)
    k4 = np.empty(dim, np.complex128)
    yt = np.empty(dim, np.complex128)

    # per-term phasor angle(t) = const + rate * t
    const = np.empty(nt, np.float64)
    rate = np.empty(nt, np.float64)
    for i in range(nt):
        v = v_control if t_atom[i] == 0 else v_target
        d_diag = diag[t_row[i]] - diag[t_col[i]]
        rate[i] = t_k[i] * v + d_diag
        const[i] = t_k[i] * t_z0[i] - d_diag * t_ref

    act = np.empty(nt, np.int64)
    p = np.empty(nt, np.complex128)
    rot = np.empty(nt, np.complex128)

    residence = 0.0
    pop_prev = 0.0
    for j in range(dim):
        pop_prev += ryd_mask[j] * (y[j].real ** 2 + y[j].imag ** 2)

    for b in range(bounds.shape[0] - 1):
        ta = bounds[b]
        tb = bounds[b + 1]
        if tb <= ta:
            continue
        na = 0
        for i in range(nt):
            if t_start[i] <= ta and t_end[i] >= tb:
                act[na] = i
                na += 1
        if na == 0:
            # drive off: interaction picture is the identity, population frozen
            residence += pop_prev * (tb - ta)
            continue

        n_steps = int(np.ceil((tb - ta) / dt_max))
        if n_steps < 1:
            n_steps = 1
        h = (tb - ta) / n_steps

        for j in range(na):
            i = act[j]
            ang = const[i] + rate[i] * ta
            p[j] = complex(np.cos(ang), np.sin(ang))
            half = rate[i] * h * 0.5
            rot[j] = complex(np.cos(half), np.sin(half))

        for step in range(n_steps):
            # k1 at t
            for m in range(dim):
                k1[m] = 0.0
            for j in range(na):
                i = act[j]
                hij = t_half_om[i] * p[j]
                k1[t_row[i]] += complex(hij.imag, -hij.real) * y[t_col[i]]
                k1[t_col[i]] += complex(-hij.imag, -hij.real) * y[t_row[i]]
            # k2, k3 at t + h/2
            for j in range(na):
                p[j] = p[j] * rot[j]
            for m in range(dim):
                yt[m] = y[m] + 0.5 * h * k1[m]
                k2[m] = 0.0
            for j in range(na):
                i = act[j]
                hij = t_half_om[i] * p[j]
                k2[t_row[i]] += complex(hij.imag, -hij.real) * yt[t_col[i]]
                k2[t_col[i]] += complex(-hij.imag, -hij.real) * yt[t_row[i]]
            for m in range(dim):
                yt[m] = y[m] + 0.5 * h * k2[m]
                k3[m] = 0.0
            for j in range(na):
                i = act[j]
                hij = t_half_om[i] * p[j]
                k3[t_row[i]] += complex(hij.imag, -hij.real) * yt[t_col[i]]
                k3[t_col[i]] += complex(-hij.imag, -hij.real) * yt[t_row[i]]
            # k4 at t + h
            for j in range(na):
                p[j] = p[j] * rot[j]
            for m in range(dim):
                yt[m] = y[m] + h * k3[m]
                k4[m] = 0.0
            for j in range(na):
                i = act[j]
                hij = t_half_om[i] * p[j]
                k4[t_row[i]] += complex(hij.imag, -hij.real) * yt[t_col[i]]
                k4[t_col[i]] += complex(-hij.imag, -hij.real) * yt[t_row[i]]

            for m in range(dim):
                y[m] = y[m] + (h / 6.0) * (k1[m] + 2.0 * (k2[m] + k3[m]) + k4[m])

            pop = 0.0
            for m in range(dim):
                pop += ryd_mask[m] * (y[m].real ** 2 + y[m].imag ** 2)
            residence += 0.5 * h * (pop_prev + pop)
            pop_prev = pop

            if (step + 1) % _RESYNC == 0 and step + 1 < n_steps:
                t_now = ta + (step + 1) * h
                for j in range(na):
                    i = act[j]
                    ang = const[i] + rate[i] * t_now
                    p[j] = complex(np.cos(ang), np.sin(ang))

    # undo the interaction-picture rotation
    tau = bounds[bounds.shape[0] - 1] - t_ref
    out = np.empty(dim, np.complex128)
    for m in range(dim):
        ang = -diag[m] * tau
        out[m] = y[m] * complex(np.cos(ang), np.sin(ang))
    return out, residence


@njit(cache=True, parallel=True)
def sweep_final_amplitudes(
    dim,
    diag,
    t_row,
    t_col,
    t_half_om,
    t_k,
    t_z0,
    t_atom,
    t_start,
    t_end,
    bounds,
    dt_max,
    vc_cells,
    vt_cells,
    psi0,
    amp_index,
):
    """Final amplitude <amp_index|psi> for every (v_control, v_target) cell."""
    n = vc_cells.shape[0]
    out = np.empty(n, np.complex128)
    ryd_mask = np.zeros(dim, np.float64)
    for idx in prange(n):
        psi, _ = _rk4_core(
            dim, diag, t_row, t_col, t_half_om, t_k, t_z0, t_atom,
            t_start, t_end, bounds, dt_max,
            vc_cells[idx], vt_cells[idx], psi0, ryd_mask,
        )
        out[idx] = psi[amp_index]
    return out
