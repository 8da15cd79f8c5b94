"""Minimal SVG scatter and histogram writers (no plotting dependency)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def sturges_bins(n: int) -> int:
    return int(math.ceil(math.log2(max(n, 1)))) + 1


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _frame(title, x_range, y_range):
    x0, x1 = x_range
    y0, y1 = y_range
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    for k in range(5):
        fx = x0 + (x1 - x0) * k / 4
        fy = y0 + (y1 - y0) * k / 4
        px = MARGIN + (WIDTH - 2 * MARGIN) * k / 4
        py = HEIGHT - MARGIN - (HEIGHT - 2 * MARGIN) * k / 4
        parts.append(f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" '
                     f'font-size="10">{fx:.3g}</text>')
        parts.append(f'<text x="{MARGIN - 4}" y="{_fmt(py + 3)}" text-anchor="end" '
                     f'font-size="10">{fy:.3g}</text>')
    return parts


def _scaler(lo, hi, p_lo, p_hi):
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lambda v: p_lo + (v - lo) * (p_hi - p_lo) / (hi - lo), (lo, hi)


def scatter_svg(series: dict, title: str = "") -> str:
    """Index-vs-value scatter with one colour per named series."""
    arrays = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    n = max((a.size for a in arrays.values()), default=0)
    finite = np.concatenate([a[np.isfinite(a)] for a in arrays.values()] or [np.zeros(0)])
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    sx, x_range = _scaler(0.0, float(max(n - 1, 0)), MARGIN, WIDTH - MARGIN)
    sy, y_range = _scaler(y_lo, y_hi, HEIGHT - MARGIN, MARGIN)
    parts = _frame(title, x_range, y_range)
    for c, (name, arr) in enumerate(arrays.items()):
        color = COLORS[c % len(COLORS)]
        for i, v in enumerate(arr):
            if np.isfinite(v):
                parts.append(f'<circle cx="{_fmt(sx(i))}" cy="{_fmt(sy(v))}" r="2.5" '
                             f'fill="none" stroke="{color}"/>')
        parts.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 14 * c}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def histogram_counts(values, bins=None):
    """Counts and edges; a constant sample lands in a single bin."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    bins = sturges_bins(v.size) if bins is None else bins
    if v.size == 0:
        return np.zeros(bins, dtype=int), np.linspace(0.0, 1.0, bins + 1)
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return np.histogram(v, bins=bins, range=(lo, hi))


def histogram_svg(values, title: str = "", bins=None) -> str:
    counts, edges = histogram_counts(values, bins)
    sx, x_range = _scaler(float(edges[0]), float(edges[-1]), MARGIN, WIDTH - MARGIN)
    sy, y_range = _scaler(0.0, float(max(counts.max(), 1)), HEIGHT - MARGIN, MARGIN)
    parts = _frame(title, x_range, y_range)
    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
        if c == 0:
            continue
        x, w = sx(lo), sx(hi) - sx(lo)
        y = sy(c)
        parts.append(f'<rect class="bin" x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
                     f'height="{_fmt(HEIGHT - MARGIN - y)}" fill="{COLORS[0]}" stroke="white"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def line_svg(x, series: dict, title: str = "") -> str:
    """Polylines sharing one abscissa."""
    x = np.asarray(x, dtype=float)
    arrays = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    allv = np.concatenate(list(arrays.values()))
    allv = allv[np.isfinite(allv)]
    sx, x_range = _scaler(float(x.min()), float(x.max()), MARGIN, WIDTH - MARGIN)
    sy, y_range = _scaler(float(allv.min()), float(allv.max()), HEIGHT - MARGIN, MARGIN)
    parts = _frame(title, x_range, y_range)
    for c, (name, arr) in enumerate(arrays.items()):
        color = COLORS[c % len(COLORS)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, arr) if np.isfinite(b))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}"/>')
        parts.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 14 * c}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
