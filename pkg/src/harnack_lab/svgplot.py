"""Minimal static SVG line plots (no display server, no dependencies).

Each plot is an axes box with ticks, labeled axes, and one polyline per
series; enough for the lab's diagnostic figures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


@dataclass
class Series:
    xs: list
    ys: list
    label: str = ""


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * abs(step):
        out.append(round(t, 12))
        t += step
    return out


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.4g}"


def line_plot(series: list[Series], title: str, xlabel: str, ylabel: str,
              width: int = 640, height: int = 440) -> str:
    """Render series as an SVG string."""
    pad_l, pad_r, pad_t, pad_b = 70, 20, 40, 55
    xs_all = [x for s in series for x in s.xs if math.isfinite(x)]
    ys_all = [y for s in series for y in s.ys if math.isfinite(y)]
    if not xs_all or not ys_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + max(1.0, abs(y_lo) * 0.1)
    mx = 0.04 * (x_hi - x_lo)
    my = 0.06 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - mx, x_hi + mx
    y_lo, y_hi = y_lo - my, y_hi + my
    iw, ih = width - pad_l - pad_r, height - pad_t - pad_b

    def X(x):
        return pad_l + (x - x_lo) / (x_hi - x_lo) * iw

    def Y(y):
        return pad_t + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ih

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{iw}" height="{ih}" fill="none" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{pad_l + iw / 2:.1f}" y="{height - 12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="16" y="{pad_t + ih / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {pad_t + ih / 2:.1f})">{ylabel}</text>',
    ]
    for t in _ticks(x_lo, x_hi):
        if x_lo <= t <= x_hi:
            parts.append(f'<line x1="{X(t):.1f}" y1="{pad_t + ih}" x2="{X(t):.1f}" '
                         f'y2="{pad_t + ih + 5}" stroke="black"/>')
            parts.append(f'<text x="{X(t):.1f}" y="{pad_t + ih + 18}" '
                         f'text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        if y_lo <= t <= y_hi:
            parts.append(f'<line x1="{pad_l - 5}" y1="{Y(t):.1f}" x2="{pad_l}" '
                         f'y2="{Y(t):.1f}" stroke="black"/>')
            parts.append(f'<text x="{pad_l - 8}" y="{Y(t) + 4:.1f}" '
                         f'text-anchor="end">{_fmt(t)}</text>')
    for i, s in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in zip(s.xs, s.ys)
                       if math.isfinite(x) and math.isfinite(y))
        if pts:
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                         f'stroke-width="1.5"/>')
        if s.label:
            ly = pad_t + 16 + 16 * i
            parts.append(f'<line x1="{pad_l + iw - 110}" y1="{ly - 4}" '
                         f'x2="{pad_l + iw - 90}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{pad_l + iw - 84}" y="{ly}">{s.label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
