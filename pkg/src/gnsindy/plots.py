"""Dependency-free SVG output: field heatmaps, sample overlays and line plots."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["colormap", "heatmap_svg", "line_plot_svg", "write_svg"]

# viridis-like anchors, interpolated to a fixed 256-entry table
_ANCHORS = np.array(
    [
        [68, 1, 84],
        [71, 44, 122],
        [59, 81, 139],
        [44, 113, 142],
        [33, 144, 141],
        [39, 173, 129],
        [92, 200, 99],
        [170, 220, 50],
        [253, 231, 37],
    ],
    dtype=np.float64,
)
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def colormap() -> list[str]:
    pos = np.linspace(0, 1, _ANCHORS.shape[0])
    s = np.linspace(0, 1, 256)
    rgb = np.stack([np.interp(s, pos, _ANCHORS[:, c]) for c in range(3)], axis=1)
    return ["#%02x%02x%02x" % tuple(int(round(v)) for v in row) for row in rgb]


_CMAP = colormap()


def _num(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def heatmap_svg(values, x_grid, t_grid, title: str = "", points=None, max_cells: int = 200) -> str:
    """Space (vertical) by time (horizontal) heatmap; ``points`` is ``(t, x)`` to overlay."""
    values = np.asarray(values, dtype=np.float64)
    x_grid = np.asarray(x_grid, dtype=np.float64)
    t_grid = np.asarray(t_grid, dtype=np.float64)
    # thin very fine grids so the file stays a reasonable size
    rs = max(1, -(-values.shape[0] // max_cells))
    cs = max(1, -(-values.shape[1] // max_cells))
    v = values[::rs, ::cs]
    n, m = v.shape
    W, H, ml, mt = 520, 360, 60, 30
    cw, ch = W / m, H / n
    lo, hi = float(v.min()), float(v.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    idx = np.clip(np.round((v - lo) * scale), 0, 255).astype(int)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W + ml + 90}" height="{H + mt + 50}" font-family="sans-serif" font-size="11">',
        f'<text x="{ml + W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<g transform="translate({ml},{mt})" shape-rendering="crispEdges">',
    ]
    for i in range(n):
        y = (n - 1 - i) * ch  # x increases upwards
        for j in range(m):
            out.append(f'<rect x="{j * cw:.2f}" y="{y:.2f}" width="{cw + 0.05:.2f}" height="{ch + 0.05:.2f}" fill="{_CMAP[idx[i, j]]}"/>')
    out.append("</g>")
    t0, t1 = float(t_grid[0]), float(t_grid[-1])
    x0, x1 = float(x_grid[0]), float(x_grid[-1])
    if points is not None:
        pt, px = (np.asarray(a, dtype=np.float64) for a in points)
        sx = W / (t1 - t0) if t1 > t0 else 0.0
        sy = H / (x1 - x0) if x1 > x0 else 0.0
        out.append(f'<g transform="translate({ml},{mt})">')
        for a, b in zip(pt, px):
            out.append(f'<circle cx="{(a - t0) * sx:.2f}" cy="{H - (b - x0) * sy:.2f}" r="2.5" fill="#e41a1c" stroke="white" stroke-width="0.6"/>')
        out.append("</g>")
    out.append(_axes(ml, mt, W, H, (t0, t1), (x0, x1), "t", "x"))
    # colour bar
    bx = ml + W + 20
    for k in range(64):
        out.append(f'<rect x="{bx}" y="{mt + H - (k + 1) * H / 64:.2f}" width="14" height="{H / 64 + 0.5:.2f}" fill="{_CMAP[k * 4]}"/>')
    out.append(f'<text x="{bx + 18}" y="{mt + H}" dominant-baseline="middle">{lo:.3g}</text>')
    out.append(f'<text x="{bx + 18}" y="{mt}" dominant-baseline="middle">{hi:.3g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _axes(ml, mt, W, H, xr, yr, xlabel, ylabel) -> str:
    parts = [f'<rect x="{ml}" y="{mt}" width="{W}" height="{H}" fill="none" stroke="black"/>']
    for v in _ticks(*xr):
        px = ml + (v - xr[0]) / (xr[1] - xr[0]) * W if xr[1] > xr[0] else ml
        parts.append(f'<line x1="{px:.2f}" y1="{mt + H}" x2="{px:.2f}" y2="{mt + H + 4}" stroke="black"/>')
        parts.append(f'<text x="{px:.2f}" y="{mt + H + 16}" text-anchor="middle">{_num(v)}</text>')
    for v in _ticks(*yr):
        py = mt + H - (v - yr[0]) / (yr[1] - yr[0]) * H if yr[1] > yr[0] else mt + H
        parts.append(f'<line x1="{ml - 4}" y1="{py:.2f}" x2="{ml}" y2="{py:.2f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 6}" y="{py:.2f}" text-anchor="end" dominant-baseline="middle">{_num(v)}</text>')
    parts.append(f'<text x="{ml + W / 2}" y="{mt + H + 34}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="{ml - 44}" y="{mt + H / 2}" text-anchor="middle" transform="rotate(-90 {ml - 44} {mt + H / 2})">{escape(ylabel)}</text>')
    return "\n".join(parts)


def line_plot_svg(x, series: dict, title: str = "", xlabel: str = "iteration", ylabel: str = "") -> str:
    """One polyline per entry of ``series`` (label -> y values over ``x``)."""
    x = np.asarray(x, dtype=np.float64)
    W, H, ml, mt = 520, 320, 70, 30
    ys = [np.asarray(y, dtype=np.float64) for y in series.values()]
    allv = np.concatenate(ys) if ys else np.zeros(1)
    allv = allv[np.isfinite(allv)] if allv.size else np.zeros(1)
    lo, hi = (float(allv.min()), float(allv.max())) if allv.size else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    x0, x1 = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W + ml + 150}" height="{H + mt + 50}" font-family="sans-serif" font-size="11">',
        f'<text x="{ml + W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    if lo < 0 < hi:
        zy = mt + H - (0 - lo) / (hi - lo) * H
        out.append(f'<line x1="{ml}" y1="{zy:.2f}" x2="{ml + W}" y2="{zy:.2f}" stroke="#bbbbbb" stroke-dasharray="4 3"/>')
    for k, (label, y) in enumerate(zip(series.keys(), ys)):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(
            f"{ml + (a - x0) / (x1 - x0) * W:.2f},{mt + H - (b - lo) / (hi - lo) * H:.2f}" for a, b in zip(x, y) if np.isfinite(b)
        )
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = mt + 10 + 16 * k
        out.append(f'<line x1="{ml + W + 12}" y1="{ly}" x2="{ml + W + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + W + 35}" y="{ly}" dominant-baseline="middle">{escape(str(label))}</text>')
    out.append(_axes(ml, mt, W, H, (x0, x1), (lo, hi), xlabel, ylabel))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, svg: str) -> None:
    Path(path).write_text(svg)
