"""CSV, summary JSON and SVG emission for simulation runs."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from dqhc.algebra import qconj_arr, qmul_arr
from dqhc.hybrid_sim import CSV_COLUMNS, RunResult

_INT_COLUMNS = {"j", "h", "jump_flag"}


def _fmt(name, value):
    if name in _INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


def trajectory_csv(result: RunResult) -> str:
    """Trajectory as CSV text (header row, ``.`` decimal, fixed column order)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    cols = result.trajectory.columns()
    arrays = [cols[c] for c in CSV_COLUMNS]
    for i in range(len(result.trajectory)):
        writer.writerow([_fmt(c, a[i]) for c, a in zip(CSV_COLUMNS, arrays)])
    return buf.getvalue()


def write_csv(result: RunResult, path) -> Path:
    path = Path(path)
    path.write_text(trajectory_csv(result), encoding="utf-8")
    return path


def read_csv(path) -> dict:
    """Read a trajectory CSV back into column arrays."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def summary_dict(result: RunResult, preset: str | None = None, controller: str | None = None) -> dict:
    s = result.summary
    return {
        "preset": preset,
        "label": result.label,
        "controller": controller,
        "seed": result.seed,
        "jumps": s.jumps,
        "sign_flips": s.sign_flips,
        "switches": s.switches,
        "convergence_time_s": s.convergence_time,
        "terminal_V": s.terminal_V,
        "terminal_pose": [float(v) for v in s.final_pose],
        "projection_displacement": s.projection_displacement,
    }


def write_json(data, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# SVG

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _panel(x, series, title, top, width=640, height=150, left=60):
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in series]
    lo = min(float(np.min(y)) for y in ys)
    hi = max(float(np.max(y)) for y in ys)
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    x0, x1 = float(x[0]), float(x[-1]) if x[-1] > x[0] else float(x[0]) + 1.0
    plot_w = width - left - 10

    def px(v):
        return left + (v - x0) / (x1 - x0) * plot_w

    def py(v):
        return top + 20 + (hi - v) / (hi - lo) * (height - 40)

    # keep files small: at most ~1000 vertices per line
    stride = max(1, len(x) // 1000)
    parts = [
        f'<text x="{left}" y="{top + 14}" font-size="12" font-family="sans-serif">{title}</text>',
        f'<rect x="{left}" y="{top + 20}" width="{plot_w}" height="{height - 40}" '
        'fill="none" stroke="#999" stroke-width="0.5"/>',
        f'<text x="{left - 4}" y="{py(hi) + 4:.1f}" font-size="9" text-anchor="end">{hi:.3g}</text>',
        f'<text x="{left - 4}" y="{py(lo) + 4:.1f}" font-size="9" text-anchor="end">{lo:.3g}</text>',
        f'<text x="{left + plot_w}" y="{top + height - 6}" font-size="9" text-anchor="end">t = {x1:.3g} s</text>',
    ]
    for y, color in zip(ys, _COLORS):
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x[::stride], y[::stride]))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>')
    return "\n".join(parts)


def trajectory_svg(result: RunResult, title: str = "") -> str:
    """Four stacked panels: eta(t), translation p(t), log10 V(t), switch signal h(t)."""
    tr = result.trajectory
    # translation of the pose error: p = 2 conj(r) d
    p = 2.0 * qmul_arr(qconj_arr(tr.x[:, :4]), tr.x[:, 4:])[:, 1:4]
    logv = np.log10(np.maximum(tr.V, 1e-16))
    panels = [
        ("eta(t)", [tr.x[:, 0]]),
        ("p(t): p1 p2 p3", [p[:, 0], p[:, 1], p[:, 2]]),
        ("log10 V(t)", [logv]),
        ("s(t): switch signal h", [tr.h]),
    ]
    height = 150
    body = [_panel(tr.t, series, name, 20 + k * height) for k, (name, series) in enumerate(panels)]
    total = 20 + len(panels) * height
    head = f'<text x="10" y="14" font-size="13" font-family="sans-serif">{title}</text>' if title else ""
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="640" height="{total}" '
        f'viewBox="0 0 640 {total}">\n{head}\n' + "\n".join(body) + "\n</svg>\n"
    )


def write_svg(result: RunResult, path, title: str = "") -> Path:
    path = Path(path)
    path.write_text(trajectory_svg(result, title), encoding="utf-8")
    return path
