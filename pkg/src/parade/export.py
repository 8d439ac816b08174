"""Text and SVG emitters for trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from .engine import ARRIVAL, MERGE, Trajectory

CSV_HEADER = "t,group_id,position,weight,panic"


def _num(x: float) -> str:
    return f"{x:.12g}"


def export_csv(traj: Trajectory) -> str:
    rows: list[tuple[float, int, str]] = []
    last_panic: dict[int, float] = {}
    for seg in traj.segments:
        for r, t in enumerate(seg.times):
            for k, g in enumerate(seg.ids):
                pan = float(seg.panic[r, k])
                last_panic[g] = pan
                rows.append((float(t), g, f"{_num(t)},{g},{_num(seg.positions[r, k])},{seg.weights[k]},{_num(pan)}"))
    for e in traj.events:
        if e.kind == ARRIVAL:
            (g,) = e.participants
            pan = last_panic.get(g, 1.0 if e.weight >= 2 else 0.0)
            rows.append((e.time, g, f"{_num(e.time)},{g},{_num(traj.home)},{e.weight},{_num(pan)}"))
    rows.sort(key=lambda row: (row[0], row[1]))
    return "\n".join([CSV_HEADER] + [row[2] for row in rows]) + "\n"


def events_to_text(traj: Trajectory) -> str:
    docs = []
    for e in traj.events:
        doc = {"kind": e.kind, "t": e.time, "participants": list(e.participants)}
        if e.kind == MERGE:
            doc["new_id"] = e.new_id
            doc["position"] = e.merged_position
        if e.weight:
            doc["weight"] = e.weight
        docs.append(doc)
    return yaml.safe_dump(docs, sort_keys=False)


@dataclass(frozen=True)
class PlotStyle:
    width: int = 960
    height: int = 540
    margin: int = 50
    shoreline: float = 0.0
    base_stroke: float = 1.0
    colors: tuple[str, ...] = (
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    )


def _branches(traj: Trajectory) -> dict[int, list[tuple[float, float, float, int]]]:
    """Per group id: (t, position, panic, weight) points, ending at the group's fate."""
    paths: dict[int, list[tuple[float, float, float, int]]] = {}
    for seg in traj.segments:
        for k, g in enumerate(seg.ids):
            pts = paths.setdefault(g, [])
            for r, t in enumerate(seg.times):
                pts.append((float(t), float(seg.positions[r, k]), float(seg.panic[r, k]), seg.weights[k]))
    for e in traj.events:
        if e.kind == MERGE:
            for g in e.participants:
                if g in paths:
                    last = paths[g][-1]
                    paths[g].append((e.time, e.merged_position, last[2], last[3]))
        elif e.kind == ARRIVAL:
            g = e.participants[0]
            if g in paths:
                last = paths[g][-1]
                paths[g].append((e.time, traj.home, last[2], last[3]))
    return paths


def render_svg(traj: Trajectory, style: PlotStyle | None = None) -> str:
    style = style or PlotStyle()
    paths = _branches(traj)
    t_max = max(traj.t_end, 1e-9)
    ys = [p for pts in paths.values() for _, p, _, _ in pts] + [style.shoreline, traj.home]
    y_lo, y_hi = min(ys), max(ys)
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    m = style.margin
    plot_w, plot_h = style.width - 2 * m, style.height - 2 * m

    def sx(t: float) -> float:
        return m + plot_w * t / t_max

    def sy(y: float) -> float:
        return m + plot_h * (y_hi - y) / (y_hi - y_lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}">',
        f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="white"/>',
        f'<rect x="{m}" y="{m}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>',
        f'<line class="shoreline" x1="{m}" y1="{sy(style.shoreline):.2f}" x2="{m + plot_w}" '
        f'y2="{sy(style.shoreline):.2f}" stroke="#3b7dd8" stroke-width="1.5"/>',
        f'<line class="home" x1="{m}" y1="{sy(traj.home):.2f}" x2="{m + plot_w}" '
        f'y2="{sy(traj.home):.2f}" stroke="#2a2" stroke-width="1.5"/>',
    ]
    for k in range(6):
        t = t_max * k / 5
        out.append(
            f'<text x="{sx(t):.2f}" y="{style.height - m / 2:.2f}" font-size="11" '
            f'text-anchor="middle">{t:.3g}</text>'
        )
    for y in (style.shoreline, traj.home):
        out.append(f'<text x="{m - 6}" y="{sy(y) + 4:.2f}" font-size="11" text-anchor="end">{y:g}</text>')
    out.append(f'<text x="{style.width / 2:.1f}" y="{style.height - 6}" font-size="12" text-anchor="middle">time</text>')
    out.append(f'<text x="14" y="{style.height / 2:.1f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {style.height / 2:.1f})">position</text>')

    for g in sorted(paths):
        pts = paths[g]
        color = style.colors[g % len(style.colors)]
        width = style.base_stroke * (1 + math.sqrt(pts[0][3]) / 2)
        out.append(f'<g class="branch" data-group="{g}" data-weight="{pts[0][3]}">')
        # split into runs of equal panic state; neighbouring runs share an endpoint
        run = [pts[0]]
        for prev, cur in zip(pts, pts[1:]):
            if (cur[2] < 1.0) != (prev[2] < 1.0):
                out.append(_polyline(run, color, width, prev[2] < 1.0, sx, sy))
                run = [prev]
            run.append(cur)
        out.append(_polyline(run, color, width, run[-1][2] < 1.0, sx, sy))
        out.append("</g>")
    for e in traj.events:
        if e.kind == MERGE:
            out.append(
                f'<circle class="merge" cx="{sx(e.time):.2f}" cy="{sy(e.merged_position):.2f}" '
                f'r="3" fill="black"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _polyline(run, color, width, panicked, sx, sy) -> str:
    coords = " ".join(f"{sx(t):.2f},{sy(p):.2f}" for t, p, _, _ in run)
    dash = ' stroke-dasharray="4 3"' if panicked else ""
    return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width:.2f}"{dash}/>'
