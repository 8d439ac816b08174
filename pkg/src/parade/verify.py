"""Homecoming bookkeeping and executable checks of the two homecoming theorems.

Both theorems give sufficient conditions: if at time ``t_o`` the hindmost
group holds at least two penguins (first theorem), or some group ``j_o``
holds at least ``kappa`` (second theorem), and the homeward speed floor
``iota`` is positive, then everybody (resp. everybody from ``j_o`` forward)
is home by ``t_o + (home - p(t_o)) / iota``. The checkers evaluate the
hypotheses on a simulated trajectory and report whether the conclusion was
witnessed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import yaml

from .engine import Trajectory
from .model import ModelParams, environment_infimum


@dataclass(frozen=True)
class HomecomingReport:
    N_of_t: list[tuple[float, int]]
    M: int
    arrivals: list[tuple[float, int]]
    frozen_at_horizon: list[tuple[int, float, int]]
    t_end: float


@dataclass(frozen=True)
class TheoremCertificate:
    theorem: int
    t_o: float
    iota: float
    bound_T: float | None
    applicable: bool
    witnessed: bool
    witnessed_T: float | None
    target: int
    group: int | None = None
    # False when the run ended before bound_T without the conclusion: inconclusive
    covered: bool = True

    @property
    def violated(self) -> bool:
        return self.applicable and self.covered and not self.witnessed


def homecoming_count(traj: Trajectory, t: float) -> int:
    """Number of penguins clamped at home by time ``t``."""
    if not 0 <= t <= traj.t_end:
        raise ValueError(f"time {t} outside trajectory span [0, {traj.t_end}]")
    return sum(a.weight for a in traj.final.arrived if a.time <= t)


def _first_time_reaching(traj: Trajectory, target: int) -> float | None:
    count = 0
    for a in sorted(traj.final.arrived, key=lambda a: a.time):
        count += a.weight
        if count >= target:
            return a.time
    return None


def homecoming_report(traj: Trajectory) -> HomecomingReport:
    steps = [(0.0, 0)]
    count = 0
    for a in sorted(traj.final.arrived, key=lambda a: a.time):
        count += a.weight
        if steps[-1][0] == a.time:
            steps[-1] = (a.time, count)
        else:
            steps.append((a.time, count))
    frozen = []
    last = traj.segments[-1] if traj.segments else None
    if last is not None and last.ids and last.times[-1] == traj.t_end:
        for k, g in enumerate(last.ids):
            if last.panic[-1, k] == 0.0:
                frozen.append((g, float(last.positions[-1, k]), last.weights[k]))
    return HomecomingReport(
        steps,
        traj.total,
        [(a.time, a.weight) for a in traj.final.arrived],
        frozen,
        traj.t_end,
    )


def _certificate(theorem, traj, t_o, iota, start, target, event_tol, group=None):
    if iota <= 0 or start is None:
        return TheoremCertificate(theorem, t_o, iota, None, False, False, None, target, group)
    bound = t_o + (traj.home - start) / iota
    reached = _first_time_reaching(traj, target)
    witnessed = reached is not None and reached <= bound + event_tol
    covered = witnessed or traj.t_end >= bound
    return TheoremCertificate(theorem, t_o, iota, bound, True, witnessed, reached, target, group, covered)


def check_theorem1(traj: Trajectory, params: ModelParams, t_o: float, event_tol: float = 1e-9) -> TheoremCertificate:
    """Hindmost group of at least two at ``t_o`` implies full homecoming in time."""
    state = traj.state_at(t_o)
    iota = params.epsilon + environment_infimum(params.environment, t_o)
    if state.n == 0 or state.weights[0] < 2:
        return TheoremCertificate(1, t_o, iota, None, False, False, None, traj.total)
    return _certificate(1, traj, t_o, iota, float(state.positions[0]), traj.total, event_tol, state.ids[0])


def check_theorem2(
    traj: Trajectory, params: ModelParams, t_o: float, j_o: int, event_tol: float = 1e-9
) -> TheoremCertificate:
    """A group of at least ``kappa`` at ``t_o`` brings itself and everyone ahead home.

    ``j_o`` indexes the active groups at ``t_o`` from the back (0 is hindmost).
    Groups already home count as being ahead of every active group.
    """
    state = traj.state_at(t_o)
    if not 0 <= j_o < state.n:
        raise IndexError(f"group index {j_o} invalid at t={t_o} ({state.n} active groups)")
    iota = params.epsilon + params.v + environment_infimum(params.environment, t_o)
    target = state.arrived_weight + int(state.weights[j_o:].sum())
    if state.weights[j_o] < params.kappa:
        return TheoremCertificate(2, t_o, iota, None, False, False, None, target, state.ids[j_o])
    return _certificate(2, traj, t_o, iota, float(state.positions[j_o]), target, event_tol, state.ids[j_o])


def certificate_times(traj: Trajectory) -> list[float]:
    """Natural choices of ``t_o``: the start and every reset time."""
    times = [0.0]
    for e in traj.events:
        if e.time not in times and e.time <= traj.t_end and e.kind != "horizon":
            times.append(e.time)
    return times


def scan_certificates(traj: Trajectory, params: ModelParams, event_tol: float = 1e-9) -> list[TheoremCertificate]:
    """Every applicable certificate at the start and at each reset time."""
    found = []
    for t_o in certificate_times(traj):
        cert = check_theorem1(traj, params, t_o, event_tol)
        if cert.applicable:
            found.append(cert)
        state = traj.state_at(t_o)
        for j in range(state.n):
            cert = check_theorem2(traj, params, t_o, j, event_tol)
            if cert.applicable:
                found.append(cert)
    return found


def penguin_paths(traj: Trajectory, times) -> np.ndarray:
    """Position of every initial group at each of ``times``.

    Column ``k`` follows initial group ``k`` through its merges; arrived
    groups sit at home. Useful for comparing runs whose merge times differ
    slightly.
    """
    initial_ids = traj.initial.ids
    ancestors: dict[int, set[int]] = {}

    def roots(g):
        if g not in ancestors:
            parents = traj.genealogy.get(g, ())
            ancestors[g] = {g} if not parents else set().union(*(roots(p) for p in parents))
        return ancestors[g]

    arrivals = {e.participants[0]: e.time for e in traj.events if e.kind == "arrival"}
    out = np.full((len(times), len(initial_ids)), np.nan)
    col = {g: k for k, g in enumerate(initial_ids)}
    for r, t in enumerate(times):
        seg = traj.segment_at(t)
        if seg is not None and seg.ids:
            pos = seg.positions_at(t)
            for g, p in zip(seg.ids, pos):
                for root in roots(g):
                    out[r, col[root]] = p
        for g, ta in arrivals.items():
            if ta <= t:
                for root in roots(g):
                    out[r, col[root]] = traj.home
    return out


def event_signature(traj: Trajectory) -> list[tuple[str, tuple[int, ...]]]:
    return [(e.kind, e.participants) for e in traj.events if e.kind != "horizon"]


def report_to_text(report: HomecomingReport) -> str:
    doc = {
        "M": report.M,
        "N_final": report.N_of_t[-1][1],
        "t_end": report.t_end,
        "N_of_t": [{"t": t, "N": n} for t, n in report.N_of_t],
        "arrivals": [{"t": t, "weight": w} for t, w in report.arrivals],
        "frozen_at_horizon": [
            {"group": g, "position": p, "weight": w} for g, p, w in report.frozen_at_horizon
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)


def certificates_to_text(certs: list[TheoremCertificate]) -> str:
    return yaml.safe_dump([asdict(c) for c in certs], sort_keys=False)
