"""CSV and SVG output for trajectories and reports."""

from __future__ import annotations

import os
import tempfile
from html import escape
from pathlib import Path

import numpy as np

from .sim import Trajectory

FLOAT_FMT = "%.9g"


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def trajectory_csv(traj: Trajectory, times=None) -> str:
    """CSV text with header ``t,x0,x1..xn[,xi1..xin],u0,u,gamma,V``.

    ``times`` selects samples that must exist exactly (checkpoints); by
    default every stored sample is written.
    """
    if times is not None:
        traj = traj.at_times(times)
    names, data = traj.columns()
    data = data + 0.0  # drop signed zeros
    lines = [",".join(names)]
    lines += [",".join(FLOAT_FMT % v for v in row) for row in data]
    return "\n".join(lines) + "\n"


def resample_times(traj: Trajectory, grid) -> np.ndarray:
    """``0`` followed by the grid points; all must be checkpoints of the run."""
    return np.concatenate([[traj.t[0]], np.asarray(grid, dtype=float)])


# --- SVG -------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
            "#7f7f7f")


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step * 1e-9, step)]


def line_chart_svg(t, series: dict, title: str = "", xlabel: str = "t",
                   width: int = 720, height: int = 360, max_points: int = 2000) -> str:
    """A static line chart with axes, ticks and a legend."""
    t = np.asarray(t, dtype=float)
    stride = max(1, len(t) // max_points)
    idx = np.arange(0, len(t), stride)
    if idx[-1] != len(t) - 1:
        idx = np.append(idx, len(t) - 1)
    ml, mr, mt, mb = 64, 130, 36, 44
    pw, ph = width - ml - mr, height - mt - mb
    ys = [np.asarray(v, dtype=float)[idx] for v in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(1)
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    x_lo, x_hi = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0

    def sx(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return mt + (y_hi - v) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="20" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
    for v in _nice_ticks(x_lo, x_hi):
        x = sx(v)
        out.append(f'<line x1="{x:.1f}" y1="{mt + ph}" x2="{x:.1f}" y2="{mt + ph + 4}" '
                   'stroke="#444"/>')
        out.append(f'<text x="{x:.1f}" y="{mt + ph + 16}" text-anchor="middle">{v:g}</text>')
    for v in _nice_ticks(y_lo, y_hi):
        y = sy(v)
        out.append(f'<line x1="{ml - 4}" y1="{y:.1f}" x2="{ml + pw}" y2="{y:.1f}" '
                   'stroke="#ddd"/>')
        out.append(f'<text x="{ml - 6}" y="{y + 4:.1f}" text-anchor="end">{v:.4g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    for k, (name, y) in enumerate(zip(series, ys)):
        colour = _PALETTE[k % len(_PALETTE)]
        ok = np.isfinite(y)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t[idx][ok], y[ok]))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 14 + 16 * k
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly - 4}" x2="{ml + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 34}" y="{ly}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_charts(traj: Trajectory, label: str = "") -> dict[str, str]:
    """``{"states": svg, "controls": svg}`` for a trajectory."""
    states = {"x0": traj.x0}
    states.update({f"x{i + 1}": traj.x[:, i] for i in range(traj.n)})
    if traj.xi is not None:
        states.update({f"xi{i + 1}": traj.xi[:, i] for i in range(traj.n)})
    controls = {"u0": traj.u0, "u": traj.u}
    prefix = f"{label}: " if label else ""
    return {
        "states": line_chart_svg(traj.t, states, prefix + "states"),
        "controls": line_chart_svg(traj.t, controls, prefix + "controls"),
    }
