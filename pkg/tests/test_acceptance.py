"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import time
from pathlib import Path

import numpy as np
import pytest

from parade.engine import SolverSettings, simulate
from parade.export import export_csv, render_svg
from parade.model import rhs, sight_value
from parade.oracle import oracle_integrate
from parade.scenarios import builtin, builtin_scenarios, load_scenario, random_scenario
from parade.verify import (
    check_theorem1,
    check_theorem2,
    event_signature,
    homecoming_report,
    penguin_paths,
    scan_certificates,
)

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
    assert ok, detail


def run(cfg):
    return simulate(cfg.herd(), cfg.params, cfg.settings)


def conservation_violations(traj):
    bad = 0
    for seg in traj.segments:
        for t in seg.times:
            home = sum(a.weight for a in traj.final.arrived if a.time <= t)
            if sum(seg.weights) + home != traj.total:
                bad += 1
    return bad


def test_conservation(capsys):
    start = time.perf_counter()
    randoms = [random_scenario(s, max_groups=10, max_total=30) for s in range(200)]
    assert all(len(cfg.initial) <= 10 and cfg.total <= 30 for cfg in randoms)
    configs = list(builtin_scenarios()) + randoms
    violations = checked = 0
    for cfg in configs:
        traj = run(cfg)
        violations += conservation_violations(traj)
        checked += sum(len(s.times) for s in traj.segments)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed <= 60
    report(capsys, 1, "conservation", ok,
           f"{len(configs)} runs, {checked} output times, {violations} violations, {elapsed:.1f}s")


def test_oracle_equivalence(capsys):
    start = time.perf_counter()
    step, horizon = 0.005, 5.0
    worst_dt = worst_dx = 0.0
    mismatched = []
    envs = set()
    for seed in range(10):
        cfg = random_scenario(seed, max_groups=5, max_total=8, step=step, horizon=horizon)
        envs.add(cfg.params.environment.kind)
        eng = run(cfg)
        ref = oracle_integrate(cfg.herd(), cfg.params, step / 1000, horizon,
                               merge_gap=cfg.settings.merge_gap, grid_dt=step)
        if event_signature(eng) != event_signature(ref):
            mismatched.append(seed)
            continue
        for a, b in zip(eng.events, ref.events):
            worst_dt = max(worst_dt, abs(a.time - b.time))
        t_stop = min(eng.t_end, ref.t_end)
        grid = np.arange(0, int(round(t_stop / step)) + 1) * step
        grid = grid[grid <= t_stop]
        diff = np.abs(penguin_paths(eng, grid) - penguin_paths(ref, grid))
        worst_dx = max(worst_dx, float(np.nanmax(diff)))
    elapsed = time.perf_counter() - start
    ok = not mismatched and worst_dt <= 1e-3 and worst_dx <= 1e-4 and elapsed <= 120
    report(capsys, 2, "oracle equivalence", ok,
           f"environments {sorted(envs)}, signature mismatches {mismatched}, "
           f"max event-time gap {worst_dt:.2e}, sup position error {worst_dx:.2e}, {elapsed:.1f}s")


def test_closed_form(capsys):
    pair = load_scenario(SCENARIOS / "symmetric-pair.yaml")
    merge = run(pair).merges()[0]
    solo = load_scenario(SCENARIOS / "constant-speed.yaml")
    arrival = run(solo).arrivals()[0]
    ok = (abs(merge.time - 1.0) <= 1e-6 and abs(merge.merged_position) <= 1e-6
          and abs(arrival.time - 4 / 1.1) <= 1e-6)
    report(capsys, 3, "closed-form fixtures", ok,
           f"merge t={merge.time:.12f} at {merge.merged_position:.3e}; "
           f"arrival t={arrival.time:.12f} vs {4 / 1.1:.12f}")


def theorem_sweep(theorem, seeds=range(60)):
    applicable = witnessed = inconclusive = 0
    violations = []
    for seed in seeds:
        cfg = random_scenario(seed, horizon=40.0)
        traj = run(cfg)
        for c in scan_certificates(traj, cfg.params, cfg.settings.event_tol):
            if c.theorem != theorem:
                continue
            applicable += 1
            witnessed += c.witnessed
            inconclusive += not c.covered
            if c.violated:
                violations.append((seed, c.t_o))
    return applicable, witnessed, inconclusive, violations


def test_theorem1(capsys):
    applicable, witnessed, inconclusive, violations = theorem_sweep(1)
    cfg = load_scenario(SCENARIOS / "theorem1-fixture.yaml")
    cert = check_theorem1(run(cfg), cfg.params, 0.0, cfg.settings.event_tol)
    fixture_ok = (cert.applicable and cert.witnessed and cert.bound_T == pytest.approx(40.0)
                  and cert.witnessed_T <= 40.0)
    ok = not violations and applicable > 0 and fixture_ok
    report(capsys, 4, "first homecoming theorem", ok,
           f"{applicable} applicable certificates, {witnessed} witnessed, {inconclusive} inconclusive, "
           f"violations {violations}; fixture bound {cert.bound_T} witnessed at {cert.witnessed_T:.6f}")


def test_theorem2(capsys):
    applicable, witnessed, inconclusive, violations = theorem_sweep(2)
    cfg = load_scenario(SCENARIOS / "constant-speed.yaml")
    cert = check_theorem2(run(cfg), cfg.params, 0.0, 0, cfg.settings.event_tol)
    fixture_ok = cert.applicable and abs(cert.witnessed_T - cert.bound_T) <= 1e-6
    ok = not violations and applicable > 0 and fixture_ok
    report(capsys, 5, "second homecoming theorem", ok,
           f"{applicable} applicable certificates, {witnessed} witnessed, {inconclusive} inconclusive, "
           f"violations {violations}; fixture bound {cert.bound_T:.10f} witnessed at {cert.witnessed_T:.10f}")


def isolated_panic_ok(traj, group, params):
    """Panic of ``group`` is 0 at every sample where nobody is within sight of panic."""
    for seg in traj.segments:
        if group not in seg.ids:
            continue
        k = seg.ids.index(group)
        others = [j for j in range(len(seg.ids)) if j != k]
        for r in range(len(seg.times)):
            gaps = np.abs(seg.positions[r, others] - seg.positions[r, k])
            if (not others or gaps.min() >= params.d_hi) and seg.panic[r, k] != 0.0:
                return False
    return True


def test_figure_behaviours(capsys):
    a = run(builtin("all-home"))
    n_a = homecoming_report(a).N_of_t[-1][1]

    c_cfg = builtin("one-frozen-in-water")
    c = run(c_cfg)
    final = c.final
    c_ok = (final.n == 1 and final.weights[0] == 1 and final.positions[0] < 0.0
            and isolated_panic_ok(c, final.ids[0], c_cfg.params))

    d_cfg = builtin("frozen-on-shore")
    d = run(d_cfg)
    speeds = rhs(d.final.positions, d.final.weights, d.final.time, d_cfg.params)
    on_land = [(g, p, s) for g, p, s in zip(d.final.ids, d.final.positions, speeds) if 0.0 < p < 4.0]
    d_ok = len(on_land) == 1 and on_land[0][2] == 0.0

    ok = n_a == 20 and c_ok and d_ok
    report(capsys, 6, "figure behaviours", ok,
           f"(a) N={n_a}; (c) active {[(g, round(float(p), 3), int(w)) for g, p, w in zip(final.ids, final.positions, final.weights)]}; "
           f"(d) on land {[(g, round(float(p), 3), float(s)) for g, p, s in on_land]}")


def sight_driven_pair(cfg):
    """At least two groups below kappa that can see each other."""
    steered = [p for p, w in cfg.initial if w < cfg.params.kappa]
    return any(sight_value(cfg.params.sight, abs(a - b)) > 0
               for i, a in enumerate(steered) for b in steered[i + 1:])


def test_no_panic_mode(capsys):
    not_one = []
    no_cluster = []
    qualifying = 0
    for seed in range(50):
        cfg = random_scenario(seed, panic_profile="always_one")
        traj = run(cfg)
        if any(np.any(seg.panic != 1.0) for seg in traj.segments):
            not_one.append(seed)
        if sight_driven_pair(cfg):
            qualifying += 1
            if not traj.merges():
                no_cluster.append(seed)
    ok = not not_one and not no_cluster and qualifying > 0
    report(capsys, 7, "no-panic mode", ok,
           f"panic != 1 in {not_one}; {qualifying} scenarios with mutually visible steered groups, "
           f"without a merge: {no_cluster}")


def test_determinism(capsys):
    differing = []
    for cfg in builtin_scenarios():
        first, second = run(cfg), run(cfg)
        if export_csv(first).encode() != export_csv(second).encode():
            differing.append((cfg.name, "trajectory.csv"))
        if render_svg(first).encode() != render_svg(second).encode():
            differing.append((cfg.name, "plot.svg"))
    report(capsys, 8, "determinism", not differing, f"differing outputs: {differing}")


def test_sanity_settings_are_defaults():
    # acceptance runs use the stated step; guard against accidental edits
    assert SolverSettings().event_tol == 1e-9 and SolverSettings().merge_gap == 1e-9
