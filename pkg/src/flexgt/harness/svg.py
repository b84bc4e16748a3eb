"""Static, dependency-free SVG charts: log-scale line plots and (d1, d2) heatmaps.

Output is a pure function of the input data; coordinates are written with a
fixed number of decimals so identical data gives identical bytes.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["render_svg", "lines_svg", "heatmap_svg"]

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=170, top=40, bottom=55)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def _f(x: float) -> str:
    return f"{x:.2f}"


def _header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def _note(text: str) -> str:
    return (
        f'<text class="note" x="{MARGIN["left"] + 8}" y="{MARGIN["top"] + 16}" '
        f'fill="#555">{escape(text)}</text>'
    )


def lines_svg(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    """Line chart with a log-scaled y axis; non-positive or non-finite y values are skipped."""
    cleaned = []
    for label, xs, ys in series:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys) & (ys > 0)
        cleaned.append((label, xs[keep], ys[keep]))
    if not cleaned:
        raise ValueError("no series to plot")
    all_x = np.concatenate([c[1] for c in cleaned])
    all_y = np.concatenate([c[2] for c in cleaned])

    x0, y0 = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    out = _header(title)
    notes = []
    if all_x.size == 0:
        notes.append("no plottable points")
        xmin, xmax, lo, hi = 0.0, 1.0, 0, 1
    else:
        xmin, xmax = float(all_x.min()), float(all_x.max())
        lo = math.floor(math.log10(all_y.min()))
        hi = math.ceil(math.log10(all_y.max()))
        if all_x.size == 1 or max(len(c[1]) for c in cleaned) == 1:
            notes.append("single data point")
    if xmax == xmin:
        xmax = xmin + 1.0
    if hi == lo:
        hi = lo + 1

    def px(x):
        return x0 + (x - xmin) / (xmax - xmin) * pw

    def py(y):
        return y0 + ph - (math.log10(y) - lo) / (hi - lo) * ph

    out.append(
        f'<rect class="frame" x="{x0}" y="{y0}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#333"/>'
    )
    step = max(1, (hi - lo) // 8)
    for e in range(lo, hi + 1, step):
        y = y0 + ph - (e - lo) / (hi - lo) * ph
        out.append(f'<line x1="{x0}" y1="{_f(y)}" x2="{x0 + pw}" y2="{_f(y)}" stroke="#ddd"/>')
        out.append(f'<text x="{x0 - 6}" y="{_f(y + 4)}" text-anchor="end">1e{e}</text>')
    for k in range(5):
        xv = xmin + k * (xmax - xmin) / 4
        out.append(f'<text x="{_f(px(xv))}" y="{y0 + ph + 16}" text-anchor="middle">{xv:.4g}</text>')
    out.append(f'<text x="{x0 + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{y0 + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {y0 + ph / 2:.2f})">{escape(ylabel)}</text>'
    )

    legend = ['<g class="legend">']
    for k, (label, xs, ys) in enumerate(cleaned):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_f(px(a))},{_f(py(b))}" for a, b in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = y0 + 10 + 18 * k
        lx = x0 + pw + 12
        legend.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        legend.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    legend.append("</g>")
    out.extend(legend)
    out.extend(_note(t) for t in notes)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _color(t: float) -> str:
    # light yellow (low) to dark blue (high)
    a = np.array([255, 247, 188])
    b = np.array([37, 52, 148])
    r, g, bl = (a + (b - a) * t).round().astype(int)
    return f"#{r:02x}{g:02x}{bl:02x}"


def heatmap_svg(
    grid: np.ndarray,
    title: str = "",
    row_label: str = "d1",
    col_label: str = "d2",
    log: bool = True,
) -> str:
    """Heatmap of ``grid[d1 - 1, d2 - 1]``; NaN cells are gray and the minimum is outlined."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 2 or grid.size == 0:
        raise ValueError("heatmap needs a non-empty 2-D grid")
    rows, cols = grid.shape
    x0, y0 = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    cw, ch = pw / cols, ph / rows
    out = _header(title)

    finite = np.isfinite(grid)
    vals = np.where(finite & (grid > 0), grid, np.nan)
    scaled = np.log10(vals) if log else vals
    notes = []
    if np.any(np.isfinite(scaled)):
        lo, hi = np.nanmin(scaled), np.nanmax(scaled)
    else:
        lo, hi = 0.0, 1.0
        notes.append("no finite cells")
    if grid.size == 1:
        notes.append("single cell")
    span = hi - lo if hi > lo else 1.0

    for i in range(rows):
        for j in range(cols):
            x, y = x0 + j * cw, y0 + i * ch
            if np.isfinite(scaled[i, j]):
                fill = _color((scaled[i, j] - lo) / span)
                text = f"{grid[i, j]:.4g}"
            else:
                fill, text = "#bbbbbb", "n/a"
            out.append(
                f'<rect class="cell" x="{_f(x)}" y="{_f(y)}" width="{_f(cw)}" height="{_f(ch)}" '
                f'fill="{fill}" stroke="#fff"/>'
            )
            out.append(
                f'<text x="{_f(x + cw / 2)}" y="{_f(y + ch / 2 + 4)}" text-anchor="middle" '
                f'font-size="9">{text}</text>'
            )
    for j in range(cols):
        out.append(f'<text x="{_f(x0 + (j + 0.5) * cw)}" y="{y0 + ph + 16}" text-anchor="middle">{j + 1}</text>')
    for i in range(rows):
        out.append(f'<text x="{x0 - 8}" y="{_f(y0 + (i + 0.5) * ch + 4)}" text-anchor="end">{i + 1}</text>')
    out.append(f'<text x="{x0 + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(col_label)}</text>')
    out.append(
        f'<text x="20" y="{y0 + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {y0 + ph / 2:.2f})">{escape(row_label)}</text>'
    )
    if np.any(finite):
        i, j = np.unravel_index(int(np.nanargmin(np.where(finite, grid, np.nan))), grid.shape)
        out.append(
            f'<rect class="argmin" x="{_f(x0 + j * cw)}" y="{_f(y0 + i * ch)}" width="{_f(cw)}" '
            f'height="{_f(ch)}" fill="none" stroke="#00a000" stroke-width="3"/>'
        )
        lx = x0 + pw + 12
        out.append(f'<text x="{lx}" y="{y0 + 12}">min at {row_label}={i + 1}, {col_label}={j + 1}</text>')
    out.extend(_note(t) for t in notes)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(kind: str, data: dict, path: str | Path) -> Path:
    """Write a ``"lines"`` or ``"heatmap"`` chart to ``path``.

    ``data`` holds the keyword arguments of :func:`lines_svg` or
    :func:`heatmap_svg`.
    """
    if kind == "lines":
        text = lines_svg(**data)
    elif kind == "heatmap":
        text = heatmap_svg(**data)
    else:
        raise ValueError(f"unknown chart kind {kind!r}")
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path
