"""Standalone SVG renderer for curves, histograms and sweep panels.

Deliberately dependency-free: emits a fixed-size document with axes,
tick labels, one polyline per series and a legend.  Good enough for
desk comparison of the reproduced figures; not a plotting library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WIDTH, HEIGHT = 800, 500
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 160, 40, 60

PALETTE = ["#2b8a3e", "#0c8599", "#1864ab", "#9c36b5", "#c92a2a",
           "#e8590c", "#5f3dc4", "#077a6d"]


@dataclass(frozen=True)
class FigureStyle:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    log_y: bool = False
    y_max_pad: float = 1.05


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


def _nice_ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.3g}"
    return f"{v:g}"


def render_figure(series, style: FigureStyle = FigureStyle()) -> str:
    """Render a list of :class:`Series` to an SVG document string."""
    series = [s if isinstance(s, Series) else Series(*s) for s in series]
    if not series or all(len(s.x) == 0 for s in series):
        raise ValueError("no data to render")

    all_x = np.concatenate([np.asarray(s.x, dtype=float) for s in series])
    all_y = np.concatenate([np.asarray(s.y, dtype=float) for s in series])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    if style.log_y:
        pos = all_y[all_y > 0]
        if len(pos) == 0:
            raise ValueError("log scale needs positive values")
        y_lo = math.floor(math.log10(pos.min()))
        y_hi = math.ceil(math.log10(pos.max() * style.y_max_pad))
        if y_hi == y_lo:
            y_hi += 1
    else:
        y_lo = min(0.0, float(all_y.min()))
        y_hi = float(all_y.max()) * style.y_max_pad
        if y_hi == y_lo:
            y_hi = y_lo + 1.0

    px_w = WIDTH - MARGIN_L - MARGIN_R
    px_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * px_w

    def sy(v):
        if style.log_y:
            v = math.log10(v) if v > 0 else y_lo
        return MARGIN_T + px_h - (v - y_lo) / (y_hi - y_lo) * px_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH/2}" y="24" text-anchor="middle" '
        f'font-size="16">{style.title}</text>',
    ]

    # axes
    x0, y0 = MARGIN_L, MARGIN_T + px_h
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + px_w}" y2="{y0}" '
                 'stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN_T}" '
                 'stroke="black"/>')

    for t in _nice_ticks(x_lo, x_hi):
        parts.append(f'<line x1="{sx(t):.1f}" y1="{y0}" x2="{sx(t):.1f}" '
                     f'y2="{y0 + 5}" stroke="black"/>')
        parts.append(f'<text x="{sx(t):.1f}" y="{y0 + 20}" text-anchor="middle" '
                     f'font-size="12" class="xtick">{_fmt(t)}</text>')
    if style.log_y:
        y_ticks = list(range(int(y_lo), int(y_hi) + 1))
        labels = [f"1e{k}" for k in y_ticks]
        y_vals = [10.0 ** k for k in y_ticks]
    else:
        y_vals = _nice_ticks(y_lo, y_hi)
        labels = [_fmt(v) for v in y_vals]
        if y_hi not in y_vals:            # always label the axis ceiling
            y_vals.append(y_hi)
            labels.append(_fmt(y_hi))
    for v, lab in zip(y_vals, labels):
        parts.append(f'<line x1="{x0 - 5}" y1="{sy(v):.1f}" x2="{x0}" '
                     f'y2="{sy(v):.1f}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{sy(v):.1f}" text-anchor="end" '
                     f'dominant-baseline="middle" font-size="12" '
                     f'class="ytick">{lab}</text>')

    parts.append(f'<text x="{MARGIN_L + px_w/2}" y="{HEIGHT - 12}" '
                 f'text-anchor="middle" font-size="14">{style.xlabel}</text>')
    parts.append(f'<text x="20" y="{MARGIN_T + px_h/2}" text-anchor="middle" '
                 f'font-size="14" transform="rotate(-90 20 {MARGIN_T + px_h/2})">'
                 f'{style.ylabel}</text>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{sx(float(xv)):.2f},{sy(float(yv)):.2f}"
                       for xv, yv in zip(s.x, s.y))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN_T + 16 + 18 * i
        lx = MARGIN_L + px_w + 12
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 28}" y="{ly}" font-size="12" '
                     f'class="legend">{s.label}</text>')

    parts.append("</svg>")
    return "\n".join(parts)


def render_sweep_panels(records, quantity: str, style: FigureStyle = None) -> str:
    """One panel of a sweep: the chosen quantity versus pump power,
    one series per temperature."""
    by_temp = {}
    for r in records:
        if r.error:
            continue
        by_temp.setdefault(r.temp_c, []).append(r)
    series = []
    for temp in sorted(by_temp):
        rows = sorted(by_temp[temp], key=lambda q: q.pump_mw)
        series.append(Series(
            label=f"{temp:g} C",
            x=np.array([q.pump_mw for q in rows]),
            y=np.array([getattr(q, quantity) for q in rows])))
    if style is None:
        style = FigureStyle(title=quantity, xlabel="pump power (mW)",
                            ylabel=quantity, log_y=(quantity == "sbr"))
    return render_figure(series, style)
