"""Stop-and-go integration of the parade.

Inside the ordered domain the velocity law is Lipschitz, so the herd is
advanced with fixed-step classical RK4. After every step the candidate state
is checked for contact between neighbours (gap at most ``merge_gap``) and for
groups crossing the burrow at ``home``. When either happens the step is
shortened by bisection until the event time is pinned to ``event_tol``, the
reset is applied (merge or clamp), and integration restarts from the new
configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import Arrival, HerdState, ModelParams, environment_is_zero, velocity_terms

MERGE = "merge"
ARRIVAL = "arrival"
HORIZON = "horizon"

MAX_BISECTIONS = 200
# bisection resolves event times this much finer than event_tol, so that the
# overlap accumulated inside the final bracket cannot push later times past it
LOCALIZE_FACTOR = 1e-3


class EngineError(RuntimeError):
    """Diagnostic failure of the integrator (Zeno guard, bisection, invariants)."""


@dataclass(frozen=True)
class SolverSettings:
    step: float = 0.01
    event_tol: float = 1e-9
    merge_gap: float = 1e-9
    horizon: float = 10.0
    max_events: int = 10_000

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"settings.step: must be > 0 (got {self.step})")
        if not 0 < self.event_tol <= self.step:
            raise ValueError(
                f"settings.event_tol: must satisfy 0 < event_tol ≤ step (got {self.event_tol})"
            )
        if not self.merge_gap >= 0:
            raise ValueError(f"settings.merge_gap: must be ≥ 0 (got {self.merge_gap})")
        if not self.horizon > 0:
            raise ValueError(f"settings.horizon: must be > 0 (got {self.horizon})")
        if int(self.max_events) != self.max_events or self.max_events < 1:
            raise ValueError(f"settings.max_events: must be a positive integer (got {self.max_events})")


@dataclass(frozen=True)
class Event:
    kind: str
    time: float
    participants: tuple[int, ...]
    merged_position: float | None = None
    new_id: int | None = None
    weight: int = 0


@dataclass(frozen=True)
class Segment:
    """Smooth piece of the solution between two resets.

    ``times``/``positions``/``panic`` are solver output samples, all strictly
    before ``t_end`` unless the segment closes at the horizon.
    ``end_positions`` holds the configuration reached at ``t_end`` before any
    reset is applied.
    """

    t_start: float
    t_end: float
    ids: tuple[int, ...]
    weights: tuple[int, ...]
    times: np.ndarray
    positions: np.ndarray
    panic: np.ndarray
    end_positions: np.ndarray

    def positions_at(self, t: float) -> np.ndarray:
        times = np.append(self.times, self.t_end) if self.t_end > self.times[-1] else self.times
        pos = np.vstack([self.positions, self.end_positions]) if len(times) > len(self.times) else self.positions
        return np.array([np.interp(t, times, pos[:, k]) for k in range(pos.shape[1])])


@dataclass
class Trajectory:
    segments: list[Segment] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    genealogy: dict[int, tuple[int, ...]] = field(default_factory=dict)
    initial: HerdState | None = None
    final: HerdState | None = None
    home: float = 0.0
    horizon: float = 0.0

    @property
    def total(self) -> int:
        return self.initial.total

    @property
    def t_end(self) -> float:
        return self.final.time

    def merges(self) -> list[Event]:
        return [e for e in self.events if e.kind == MERGE]

    def arrivals(self) -> list[Event]:
        return [e for e in self.events if e.kind == ARRIVAL]

    def segment_at(self, t: float) -> Segment | None:
        """Segment governing time ``t`` (the post-reset one at a break time)."""
        found = None
        for seg in self.segments:
            if seg.t_start <= t <= seg.t_end:
                found = seg
                if t < seg.t_end:
                    break
        return found

    def state_at(self, t: float) -> HerdState:
        """Active configuration at ``t``, linearly interpolated between samples."""
        if not 0 <= t <= self.t_end:
            raise ValueError(f"time {t} outside trajectory span [0, {self.t_end}]")
        arrived = tuple(a for a in self.final.arrived if a.time <= t)
        seg = self.segment_at(t)
        if seg is None or not seg.ids:
            return HerdState(t, np.zeros(0), np.zeros(0, dtype=np.int64), (), arrived)
        return HerdState(t, seg.positions_at(t), np.array(seg.weights), seg.ids, arrived)


def _field(positions, weights, t, params):
    return velocity_terms(positions, weights, t, params, ordered=True)[0]


def rk4_step(positions: np.ndarray, weights: np.ndarray, t: float, h: float, params: ModelParams) -> np.ndarray:
    k1 = _field(positions, weights, t, params)
    k2 = _field(positions + 0.5 * h * k1, weights, t + 0.5 * h, params)
    k3 = _field(positions + 0.5 * h * k2, weights, t + 0.5 * h, params)
    k4 = _field(positions + h * k3, weights, t + h, params)
    return positions + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_smooth(state: HerdState, params: ModelParams, settings: SolverSettings, h: float | None = None) -> HerdState:
    """One RK4 step of size ``h`` (default ``settings.step``) for the active herd."""
    h = settings.step if h is None else h
    if h <= 0 or h > settings.step * (1 + 1e-9):
        raise ValueError(f"step size {h} outside (0, {settings.step}]")
    new = rk4_step(state.positions, state.weights, state.time, h, params)
    return replace(state, time=state.time + h, positions=new)


def _event_indicator(positions: np.ndarray, params: ModelParams, settings: SolverSettings) -> float:
    """Positive while the herd is strictly inside the ordered domain below home."""
    if positions.size == 0:
        return math.inf
    value = params.home - positions.max()
    if positions.size > 1:
        value = min(value, float(np.diff(positions).min()) - settings.merge_gap)
    return value


def _contact_slack(positions, weights, t, params: ModelParams, settings: SolverSettings) -> float:
    speed = float(np.abs(_field(positions, weights, t, params)).max(initial=0.0))
    return 4.0 * settings.event_tol * max(speed, 1.0)


def locate_event(
    pre: HerdState, post: HerdState, params: ModelParams, settings: SolverSettings
) -> tuple[list[Event], HerdState] | None:
    """Find the earliest reset between ``pre`` and ``post``.

    Returns the events detected at the localized time (merges left to right,
    then arrivals) and the un-reset state at that time, or ``None`` when the
    step stays inside the ordered domain.
    """
    if _event_indicator(post.positions, params, settings) > 0:
        return None
    lo, hi = 0.0, post.time - pre.time
    hi_pos = post.positions
    resolution = settings.event_tol * LOCALIZE_FACTOR
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= resolution:
            break
        mid = 0.5 * (lo + hi)
        trial = rk4_step(pre.positions, pre.weights, pre.time, mid, params)
        if _event_indicator(trial, params, settings) > 0:
            lo = mid
        else:
            hi, hi_pos = mid, trial
    else:
        raise EngineError(
            f"event localization did not reach tolerance {settings.event_tol} "
            f"after {MAX_BISECTIONS} bisections near t={pre.time}; step too large for the dynamics"
        )
    t_event = pre.time + hi
    at_event = replace(pre, time=t_event, positions=hi_pos)
    return _classify(at_event, params, settings), at_event


def _classify(state: HerdState, params: ModelParams, settings: SolverSettings) -> list[Event]:
    pos, w = state.positions, state.weights
    slack = _contact_slack(pos, w, state.time, params, settings)
    # split the ordered herd into runs of touching neighbours
    breaks = np.flatnonzero(np.diff(pos) > settings.merge_gap + slack) + 1
    clusters = np.split(np.arange(len(pos)), breaks)
    merges: list[Event] = []
    arrivals: list[Event] = []
    for members in clusters:
        ids = tuple(state.ids[k] for k in members)
        # front-most member: a reset never moves penguins backwards
        where = float(np.max(pos[members]))
        weight = int(w[members].sum())
        if len(members) > 1:
            merges.append(Event(MERGE, state.time, ids, where, weight=weight))
        if where >= params.home - slack:
            arrivals.append(Event(ARRIVAL, state.time, ids[:1], weight=weight))
    return merges + arrivals


def apply_merge(state: HerdState, event: Event, new_id: int) -> HerdState:
    """Replace the event's participants by one group carrying their total weight."""
    if event.kind != MERGE:
        raise ValueError(f"apply_merge needs a merge event, got {event.kind!r}")
    if len(event.participants) < 2:
        raise EngineError("merge event needs at least two participants")
    idx = [state.ids.index(g) for g in event.participants]
    if idx != list(range(idx[0], idx[0] + len(idx))):
        raise EngineError(f"merge participants {event.participants} are not adjacent")
    first, last = idx[0], idx[-1] + 1
    positions = np.concatenate(
        [state.positions[:first], [event.merged_position], state.positions[last:]]
    )
    weights = np.concatenate(
        [state.weights[:first], [state.weights[first:last].sum()], state.weights[last:]]
    )
    ids = state.ids[:first] + (new_id,) + state.ids[last:]
    return replace(state, positions=positions, weights=weights, ids=ids)


def apply_arrival(state: HerdState, event: Event) -> HerdState:
    """Clamp the participant at home and move it to the arrived set."""
    if event.kind != ARRIVAL:
        raise ValueError(f"apply_arrival needs an arrival event, got {event.kind!r}")
    (group,) = event.participants
    idx = state.ids.index(group)
    keep = np.arange(state.n) != idx
    arrival = Arrival(group, int(state.weights[idx]), event.time)
    return replace(
        state,
        positions=state.positions[keep],
        weights=state.weights[keep],
        ids=tuple(g for k, g in enumerate(state.ids) if k != idx),
        arrived=state.arrived + (arrival,),
    )


class _Recorder:
    def __init__(self, state: HerdState, params: ModelParams):
        self.params = params
        self._open(state)

    def _open(self, state: HerdState):
        self.t_start = state.time
        self.ids = state.ids
        self.weights = tuple(int(x) for x in state.weights)
        self.times: list[float] = []
        self.positions: list[np.ndarray] = []
        self.panic: list[np.ndarray] = []
        self.add(state)

    def add(self, state: HerdState, pan: np.ndarray | None = None):
        if pan is None:
            _, pan = velocity_terms(state.positions, state.weights, state.time, self.params)
        self.times.append(state.time)
        self.positions.append(state.positions.copy())
        self.panic.append(pan)

    def close(self, t_end: float, end_positions: np.ndarray) -> Segment:
        n = len(self.ids)
        return Segment(
            self.t_start,
            t_end,
            self.ids,
            self.weights,
            np.array(self.times),
            np.array(self.positions).reshape(len(self.times), n),
            np.array(self.panic).reshape(len(self.times), n),
            np.array(end_positions, dtype=float),
        )


def _premerge(state: HerdState, settings: SolverSettings, traj: Trajectory, next_id: int):
    order = np.argsort(state.positions, kind="stable")
    pos = state.positions[order]
    w = state.weights[order]
    ids = tuple(range(len(pos)))
    for g in ids:
        traj.genealogy[g] = ()
    state = HerdState(state.time, pos, w, ids, state.arrived)
    events: list[Event] = []
    k = 0
    while k < len(pos) - 1:
        j = k
        while j < len(pos) - 1 and pos[j + 1] - pos[j] <= settings.merge_gap:
            j += 1
        if j > k:
            events.append(Event(MERGE, state.time, ids[k : j + 1], float(pos[k]), weight=int(w[k : j + 1].sum())))
        k = j + 1
    for e in events:
        e = replace(e, new_id=next_id)
        state = apply_merge(state, e, next_id)
        traj.genealogy[next_id] = e.participants
        traj.events.append(e)
        next_id += 1
    return state, next_id


def _next_output_time(t: float, settings: SolverSettings) -> float:
    """Next point of the grid ``k * step`` (or the horizon) strictly after ``t``."""
    k = math.floor(t / settings.step) + 1
    while k * settings.step <= t * (1 + 1e-12) + 1e-12:
        k += 1
    return min(k * settings.step, settings.horizon)


def simulate(initial: HerdState, params: ModelParams, settings: SolverSettings) -> Trajectory:
    """Run the stop-and-go construction up to the horizon or full homecoming."""
    if initial.n and initial.positions.max() >= params.home:
        raise ValueError("initial positions must lie below home")
    traj = Trajectory(home=params.home, horizon=settings.horizon)
    state = HerdState(0.0 if initial.time is None else initial.time, initial.positions, initial.weights, (), ())
    state, next_id = _premerge(state, settings, traj, len(initial.positions))
    traj.initial = state
    frozen_ok = environment_is_zero(params.environment)

    rec = _Recorder(state, params)
    n_events = 0
    while state.n and state.time < settings.horizon:
        speeds, pan = velocity_terms(state.positions, state.weights, state.time, params)
        if frozen_ok and not np.any(speeds):
            # fixed point: keep sampling the output grid without integrating
            while state.time < settings.horizon:
                state = replace(state, time=_next_output_time(state.time, settings))
                rec.add(state, pan)
            break
        t_next = _next_output_time(state.time, settings)
        candidate = step_smooth(state, params, settings, t_next - state.time)
        candidate = replace(candidate, time=t_next)
        found = locate_event(state, candidate, params, settings)
        if found is None:
            state = candidate
            rec.add(state)
            continue

        events, at_event = found
        traj.segments.append(rec.close(at_event.time, at_event.positions))
        state = at_event
        for e in events:
            n_events += 1
            if n_events > settings.max_events:
                raise EngineError(
                    f"more than {settings.max_events} events before t={state.time}; "
                    "possible accumulation of reset times"
                )
            if e.kind == MERGE:
                e = replace(e, new_id=next_id)
                state = apply_merge(state, e, next_id)
                traj.genealogy[next_id] = e.participants
                next_id += 1
                traj.events.append(e)
            else:
                group = e.participants[0]
                if group not in state.ids:
                    # member of a cluster merged at this instant
                    group = _descendant(traj.genealogy, group, state.ids)
                    e = replace(e, participants=(group,))
                state = apply_arrival(state, e)
                traj.events.append(e)
        if state.n > 1 and not state.is_ordered():
            raise EngineError(f"ordering lost after reset at t={state.time}")
        rec._open(state)

    traj.segments.append(rec.close(state.time, state.positions))
    if state.time >= settings.horizon and state.n:
        traj.events.append(Event(HORIZON, state.time, state.ids))
    traj.final = state
    return traj


def _descendant(genealogy: dict[int, tuple[int, ...]], group: int, live: tuple[int, ...]) -> int:
    for candidate in live:
        stack = [candidate]
        while stack:
            g = stack.pop()
            if g == group:
                return candidate
            stack.extend(genealogy.get(g, ()))
    raise EngineError(f"group {group} has no live descendant")
