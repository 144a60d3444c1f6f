"""Minimal standalone SVG line and bar charts.

Only what the figure commands need: linear axes, a few tick labels, one
polyline per series and a legend.  Numbers are formatted with fixed
precision so that output is byte-stable across runs.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 64, "right": 150, "top": 40, "bottom": 52}
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]

Series = Dict[str, Tuple[Sequence[float], Sequence[float]]]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x: float) -> float:
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y: float) -> float:
        return MARGIN["top"] + (1 - (y - self.y0) / (self.y1 - self.y0)) * self.h


def _axes(frame: _Frame, title: str, xlabel: str, ylabel: str, note: Optional[str]):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
    ]
    if note:
        parts.append(f"<desc>{escape(note)}</desc>")
    parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    parts.append(f'<text x="{WIDTH / 2 - MARGIN["right"] / 2:.0f}" y="22" text-anchor="middle" '
                 f'font-size="14">{escape(title)}</text>')
    left, top = MARGIN["left"], MARGIN["top"]
    parts.append(f'<rect x="{left}" y="{top}" width="{frame.w}" height="{frame.h}" '
                 f'fill="none" stroke="#333"/>')
    for t in _ticks(frame.x0, frame.x1):
        x = _fmt(frame.px(t))
        parts.append(f'<line x1="{x}" y1="{top + frame.h}" x2="{x}" y2="{top + frame.h + 4}" stroke="#333"/>')
        parts.append(f'<text x="{x}" y="{top + frame.h + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(frame.y0, frame.y1):
        y = _fmt(frame.py(t))
        parts.append(f'<line x1="{left - 4}" y1="{y}" x2="{left + frame.w}" y2="{y}" stroke="#ddd"/>')
        parts.append(f'<text x="{left - 7}" y="{y}" text-anchor="end" dominant-baseline="middle">{t:g}</text>')
    parts.append(f'<text x="{left + frame.w / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text transform="translate(16 {top + frame.h / 2:.0f}) rotate(-90)" '
                 f'text-anchor="middle">{escape(ylabel)}</text>')
    return parts


def line_chart(
    path: Union[str, Path],
    series: Series,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    ylim: Optional[Tuple[float, float]] = None,
    note: Optional[str] = None,
) -> None:
    """Write one polyline per named ``(x, y)`` series."""
    xs = [float(x) for xv, _ in series.values() for x in xv]
    ys = [float(y) for _, yv in series.values() for y in yv if math.isfinite(y)]
    if not xs:
        raise ValueError("nothing to plot")
    ylim = ylim or (min(ys), max(ys))
    frame = _Frame((min(xs), max(xs)), ylim)
    parts = _axes(frame, title, xlabel, ylabel, note)
    for i, (name, (xv, yv)) in enumerate(series.items()):
        colour = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(frame.px(x))},{_fmt(frame.py(y))}" for x, y in zip(xv, yv) if math.isfinite(y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.6"/>')
        ly = MARGIN["top"] + 14 + 16 * i
        lx = WIDTH - MARGIN["right"] + 12
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 24}" y="{ly}" dominant-baseline="middle">{escape(name)}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def histogram_chart(
    path: Union[str, Path],
    counts: Sequence[int],
    edges: Sequence[float],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "count",
    note: Optional[str] = None,
) -> None:
    if len(edges) != len(counts) + 1:
        raise ValueError("edges must have one more entry than counts")
    frame = _Frame((float(edges[0]), float(edges[-1])), (0.0, float(max(counts)) or 1.0))
    parts = _axes(frame, title, xlabel, ylabel, note)
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        x, w = frame.px(a), frame.px(b) - frame.px(a)
        y = frame.py(c)
        parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(frame.py(0) - y)}" '
                     f'fill="{PALETTE[0]}" stroke="white" stroke-width="0.5"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
