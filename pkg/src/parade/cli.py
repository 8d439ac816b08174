"""Command-line front end: ``parade simulate|verify|sweep|list-builtins``."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .engine import EngineError, simulate
from .export import events_to_text, export_csv, render_svg
from .scenarios import ScenarioConfig, ScenarioError, builtin_scenarios, load_scenario, random_herd
from .verify import (
    certificates_to_text,
    check_theorem1,
    homecoming_report,
    report_to_text,
    scan_certificates,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_INVALID = 4
EXIT_ENGINE = 5
EXIT_VIOLATION = 6

EPILOG = """\
scenario may be a YAML file or the name of a builtin (see list-builtins).
output goes to --out, else $PARADE_OUT/<name>, else ./parade_out/<name>.

exit codes:
  0  success
  2  bad command-line usage
  3  scenario file not found
  4  malformed or invalid scenario
  5  engine diagnostic (event localization, event cap)
  6  verify found an applicable theorem whose conclusion was not witnessed
"""


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _resolve(spec: str) -> ScenarioConfig:
    path = Path(spec)
    if path.is_file():
        try:
            return load_scenario(path)
        except ScenarioError as exc:
            raise _Failure(EXIT_INVALID, f"{path}: {exc}") from None
        except UnicodeDecodeError as exc:
            raise _Failure(EXIT_INVALID, f"{path}: not UTF-8 text ({exc})") from None
    for cfg in builtin_scenarios():
        if cfg.name == spec:
            return cfg
    raise _Failure(EXIT_MISSING, f"{spec}: no such scenario file or builtin")


def _out_dir(args, cfg: ScenarioConfig) -> Path:
    if args.out:
        out = Path(args.out)
    else:
        out = Path(os.environ.get("PARADE_OUT", "parade_out")) / cfg.name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _run(cfg: ScenarioConfig):
    try:
        return simulate(cfg.herd(), cfg.params, cfg.settings)
    except EngineError as exc:
        raise _Failure(EXIT_ENGINE, f"{cfg.name}: engine failure: {exc}") from None


def cmd_simulate(args) -> int:
    cfg = _resolve(args.scenario)
    traj = _run(cfg)
    out = _out_dir(args, cfg)
    report = homecoming_report(traj)
    _write(out / "trajectory.csv", export_csv(traj))
    _write(out / "events.txt", events_to_text(traj))
    _write(out / "report.txt", report_to_text(report))
    _write(out / "plot.svg", render_svg(traj))
    print(f"{cfg.name}: N = {report.N_of_t[-1][1]} of M = {report.M} home by t = {traj.t_end:g}; wrote {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _resolve(args.scenario)
    traj = _run(cfg)
    tol = cfg.settings.event_tol
    certs = scan_certificates(traj, cfg.params, tol)
    if not any(c.theorem == 1 for c in certs):
        certs.insert(0, check_theorem1(traj, cfg.params, 0.0, tol))
    out = _out_dir(args, cfg)
    _write(out / "certificates.txt", certificates_to_text(certs))
    _write(out / "report.txt", report_to_text(homecoming_report(traj)))
    bad = [c for c in certs if c.violated]
    for theorem in (1, 2):
        mine = [c for c in certs if c.theorem == theorem and c.applicable]
        if not mine:
            print(f"theorem {theorem}: hypotheses never hold")
            continue
        first = mine[0]
        n_seen = sum(c.witnessed for c in mine)
        print(
            f"theorem {theorem}: {len(mine)} applicable, {n_seen} witnessed, "
            f"{sum(c.violated for c in mine)} violated; earliest t_o={first.t_o:g} "
            f"bound_T={first.bound_T:.6g} witnessed_T={first.witnessed_T}"
        )
    if bad:
        print(f"{len(bad)} certificate(s) violated; see {out / 'certificates.txt'}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _parse_seeds(text: str) -> range:
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if hi < lo:
        raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
    return range(lo, hi + 1)


def _variant(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    positions = [p for p, _ in cfg.initial]
    lo, hi = min(positions), max(positions)
    if hi == lo:
        lo -= 1.0
    herd = random_herd(
        seed, len(cfg.initial), (lo, hi), (1, max(w for _, w in cfg.initial)), home=cfg.params.home
    )
    return replace(cfg, name=f"{cfg.name}-seed{seed}", initial=tuple(herd), seed=seed)


def _sweep_one(job):
    cfg, out = job
    traj = simulate(cfg.herd(), cfg.params, cfg.settings)
    report = homecoming_report(traj)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "report.txt", report_to_text(report))
    last = max((t for t, _ in report.arrivals), default=None)
    return {
        "seed": cfg.seed,
        "groups": len(cfg.initial),
        "M": report.M,
        "N_final": report.N_of_t[-1][1],
        "merges": len(traj.merges()),
        "active_at_end": traj.final.n,
        "last_arrival": "" if last is None else f"{last:.12g}",
    }


def cmd_sweep(args) -> int:
    cfg = _resolve(args.scenario)
    out = _out_dir(args, cfg)
    jobs = [(_variant(cfg, s), out / f"seed-{s}") for s in args.seeds]
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(_sweep_one, jobs))
        else:
            rows = [_sweep_one(job) for job in jobs]
    except EngineError as exc:
        raise _Failure(EXIT_ENGINE, f"{cfg.name}: engine failure: {exc}") from None
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _write(out / "summary.csv", buf.getvalue())
    all_home = sum(r["N_final"] == r["M"] for r in rows)
    print(f"{cfg.name}: {len(rows)} runs, {all_home} with everyone home; wrote {out / 'summary.csv'}")
    return EXIT_OK


def cmd_list(args) -> int:
    for cfg in builtin_scenarios():
        print(cfg.name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parade",
        description="Simulate and verify the penguin parade model.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write csv, events, report and svg")
    p.add_argument("scenario")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check the homecoming theorems on a scenario run")
    p.add_argument("scenario")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run seeded random variants of a scenario's herd")
    p.add_argument("scenario")
    p.add_argument("--seeds", type=_parse_seeds, required=True, metavar="A..B")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("list-builtins", help="print builtin scenario names")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Failure as exc:
        print(f"parade: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
