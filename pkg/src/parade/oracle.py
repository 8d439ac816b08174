"""Brute-force reference integrator used to cross-check the engine.

Explicit Euler with a tiny step, its own velocity evaluation (direct double
loop over the herd), and contact/arrival times found by linear interpolation
on the Euler polygon. Nothing here calls into the engine's stepping code.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .engine import ARRIVAL, HORIZON, MERGE, Event, Segment, Trajectory
from .model import Arrival, HerdState, ModelParams

MAX_GROUPS = 5
MAX_TOTAL = 8

_SIGHT_CODES = {"constant": 0, "gaussian": 1, "ramp": 2}
_PANIC_CODES = {"ramp": 0, "always_one": 1}
_ENV_CODES = {"neutral": 0, "waves": 1}


class OracleError(ValueError):
    pass


def _coefficients(params: ModelParams) -> np.ndarray:
    s = params.sight
    sight_arg = {"constant": "value", "gaussian": "scale", "ramp": "radius"}[s.kind]
    env = params.environment
    waves = [0.0] * 5
    if env.kind == "waves":
        waves = [env.get(k) for k in ("amplitude", "omega", "phase", "shoreline", "blend")]
    return np.array(
        [
            _SIGHT_CODES[s.kind],
            s.get(sight_arg),
            _PANIC_CODES[params.panic_profile.kind],
            params.d_lo,
            params.d_hi,
            _ENV_CODES[env.kind],
            *waves,
            params.epsilon,
            params.v,
            params.kappa,
        ],
        dtype=np.float64,
    )


@njit(cache=True)
def _speeds(pos, w, t, c):
    n = pos.shape[0]
    out = np.zeros(n)
    for i in range(n):
        drive = 0.0
        near = 1.0 if c[2] == 1.0 else 0.0
        for j in range(n):
            if j == i:
                continue
            r = abs(pos[j] - pos[i])
            if c[0] == 0.0:
                s = c[1]
            elif c[0] == 1.0:
                s = math.exp(-(r / c[1]) * (r / c[1]))
            else:
                s = 1.0 - r / c[1]
                if s < 0.0:
                    s = 0.0
            if pos[j] > pos[i]:
                drive += w[j] * s
            elif pos[j] < pos[i]:
                drive -= w[j] * s
            if c[2] == 1.0:
                phi = 1.0
            elif r <= c[3]:
                phi = 1.0
            elif r >= c[4]:
                phi = 0.0
            else:
                phi = (c[4] - r) / (c[4] - c[3])
            if phi > near:
                near = phi
        if w[i] >= 2:
            fear = 1.0
        else:
            fear = near
        if w[i] >= c[13]:
            strategic = c[12]
        else:
            strategic = drive
        env = 0.0
        if c[5] == 1.0:
            x = (c[9] - pos[i]) / c[10]
            if x > 1.0:
                x = 1.0
            if x < 0.0:
                x = 0.0
            env = c[6] * math.sin(c[7] * t + c[8]) * x
        out[i] = fear * (c[11] + strategic) + env
    return out


@njit(cache=True)
def _euler_leg(pos, w, t0, t_end, h, merge_gap, home, c, grid_dt, rec_t, rec_p):
    """Advance until contact, arrival or ``t_end``.

    Returns (time reached, positions, flag, number of records) where flag is 1
    for an event and 0 for reaching ``t_end``.
    """
    n = pos.shape[0]
    p = pos.copy()
    t = t0
    k = 0
    n_rec = 0
    next_grid = (math.floor(t0 / grid_dt + 1e-9) + 1) * grid_dt
    while t < t_end - 1e-13:
        dt = h
        if t + dt > t_end:
            dt = t_end - t
        vel = _speeds(p, w, t, c)
        new = p + dt * vel
        theta = 2.0
        for i in range(n - 1):
            g1 = new[i + 1] - new[i]
            if g1 <= merge_gap:
                g0 = p[i + 1] - p[i]
                th = (g0 - merge_gap) / (g0 - g1)
                if th < theta:
                    theta = th
        for i in range(n):
            if new[i] >= home:
                th = (home - p[i]) / (new[i] - p[i])
                if th < theta:
                    theta = th
        if theta <= 1.0:
            stop = t + theta * dt
            while next_grid < stop and n_rec < rec_t.shape[0]:
                rec_t[n_rec] = next_grid
                rec_p[n_rec, :n] = p + (next_grid - t) * vel
                n_rec += 1
                next_grid += grid_dt
            return stop, p + theta * dt * vel, 1, n_rec
        t_new = t0 + (k + 1) * h
        if t_new > t_end:
            t_new = t_end
        while next_grid <= t_new + 1e-12 and n_rec < rec_t.shape[0]:
            rec_t[n_rec] = next_grid
            rec_p[n_rec, :n] = p + (next_grid - t) * vel
            n_rec += 1
            next_grid += grid_dt
        p = new
        t = t_new
        k += 1
    return t, p, 0, n_rec


def oracle_integrate(
    initial: HerdState,
    params: ModelParams,
    micro_step: float,
    horizon: float,
    merge_gap: float = 1e-9,
    grid_dt: float | None = None,
) -> Trajectory:
    """Reference trajectory with samples on the grid ``k * grid_dt``."""
    if initial.n > MAX_GROUPS or initial.total > MAX_TOTAL:
        raise OracleError(
            f"oracle limited to {MAX_GROUPS} groups and {MAX_TOTAL} penguins "
            f"(got {initial.n}, {initial.total})"
        )
    if micro_step <= 0:
        raise OracleError("micro_step must be > 0")
    grid_dt = grid_dt or micro_step * 1000
    c = _coefficients(params)

    order = np.argsort(initial.positions, kind="stable")
    pos = initial.positions[order].astype(float)
    w = initial.weights[order].astype(np.float64)
    ids = list(range(len(pos)))
    traj = Trajectory(home=params.home, horizon=horizon)
    traj.genealogy = {g: () for g in ids}
    next_id = len(ids)
    arrived: list[Arrival] = []
    t = 0.0

    def merge_runs(pos, w, ids, tol, t):
        nonlocal next_id
        k = 0
        out_p, out_w, out_ids = [], [], []
        while k < len(pos):
            j = k
            while j + 1 < len(pos) and pos[j + 1] - pos[j] <= tol:
                j += 1
            if j > k:
                parts = tuple(ids[k : j + 1])
                e = Event(MERGE, t, parts, float(np.max(pos[k : j + 1])), next_id, int(w[k : j + 1].sum()))
                traj.events.append(e)
                traj.genealogy[next_id] = parts
                out_p.append(e.merged_position)
                out_w.append(float(e.weight))
                out_ids.append(next_id)
                next_id += 1
            else:
                out_p.append(pos[k])
                out_w.append(w[k])
                out_ids.append(ids[k])
            k = j + 1
        return np.array(out_p), np.array(out_w), out_ids

    pos, w, ids = merge_runs(pos, w, ids, merge_gap, 0.0)
    traj.initial = HerdState(0.0, pos, w.astype(np.int64), tuple(ids))
    n_cap = int(math.ceil(horizon / grid_dt)) + 2

    while len(pos) and t < horizon:
        rec_t = np.zeros(n_cap)
        rec_p = np.zeros((n_cap, max(len(pos), 1)))
        t_stop, p_stop, flag, n_rec = _euler_leg(
            pos, w, t, horizon, micro_step, merge_gap, params.home, c, grid_dt, rec_t, rec_p
        )
        times = np.concatenate([[t], rec_t[:n_rec]])
        samples = np.vstack([pos[None, :], rec_p[:n_rec, : len(pos)]])
        keep = np.concatenate([[True], times[1:] < t_stop]) if flag else np.ones(len(times), bool)
        traj.segments.append(
            Segment(
                t,
                t_stop,
                tuple(ids),
                tuple(int(x) for x in w),
                times[keep],
                samples[keep],
                np.full(samples[keep].shape, np.nan),
                p_stop.copy(),
            )
        )
        t = t_stop
        if not flag:
            pos = p_stop
            break
        speed = float(np.abs(_speeds(p_stop, w, t, c)).max())
        tol = merge_gap + 2.0 * micro_step * max(speed, 1.0)
        pos, w, ids = merge_runs(p_stop, w, ids, tol, t)
        at_home = pos >= params.home - tol
        for k in np.flatnonzero(at_home):
            traj.events.append(Event(ARRIVAL, t, (ids[k],), weight=int(w[k])))
            arrived.append(Arrival(ids[k], int(w[k]), t))
        pos, w = pos[~at_home], w[~at_home]
        ids = [g for g, gone in zip(ids, at_home) if not gone]

    if len(pos) and t >= horizon:
        traj.events.append(Event(HORIZON, t, tuple(ids)))
    traj.final = HerdState(t, pos, w.astype(np.int64), tuple(ids), tuple(arrived))
    return traj
