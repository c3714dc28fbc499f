"""Minimal dependency-free SVG line plots."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 420
MARGIN = dict(left=70, right=20, top=40, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
MAX_POINTS = 1500


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    color: str | None = None
    dashed: bool = False


@dataclass
class Plot:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)
    hlines: list[tuple[float, str]] = field(default_factory=list)
    markers: list[tuple[float, float, str]] = field(default_factory=list)
    logy: bool = False


def _thin(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(x) <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).astype(int))
    # keep the extremes so peaks survive thinning
    idx = np.union1d(idx, [int(np.argmax(y)), int(np.argmin(y))])
    return x[idx], y[idx]


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    span = hi - lo
    if span <= 0:
        return np.array([lo])
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + step * 1e-9, step)


def render(plot: Plot) -> str:
    xs = np.concatenate([np.asarray(s.x, float) for s in plot.series])
    ys = np.concatenate([np.asarray(s.y, float) for s in plot.series])
    if plot.logy:
        ys = np.log10(np.maximum(ys, 1e-300))
    ys = np.concatenate([ys, [h for h, _ in plot.hlines]]) if plot.hlines and not plot.logy else ys
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(plot.title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for tx in _ticks(x0, x1):
        out.append(f'<line x1="{px(tx):.2f}" y1="{MARGIN["top"] + ph}" x2="{px(tx):.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="#444"/>')
        out.append(f'<text x="{px(tx):.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{tx:g}</text>')
    for ty in _ticks(y0, y1):
        label = f"1e{ty:g}" if plot.logy else f"{ty:g}"
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{py(ty):.2f}" x2="{MARGIN["left"]}" '
                   f'y2="{py(ty):.2f}" stroke="#444"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{py(ty) + 4:.2f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">'
               f'{escape(plot.xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(plot.ylabel)}</text>')
    for value, label in plot.hlines:
        if not plot.logy:
            out.append(f'<line x1="{MARGIN["left"]}" y1="{py(value):.2f}" x2="{MARGIN["left"] + pw}" '
                       f'y2="{py(value):.2f}" stroke="#999" stroke-dasharray="2,3"/>')
            out.append(f'<text x="{MARGIN["left"] + pw - 4}" y="{py(value) - 3:.2f}" text-anchor="end" '
                       f'fill="#777" font-size="10">{escape(label)}</text>')
    for k, s in enumerate(plot.series):
        color = s.color or PALETTE[k % len(PALETTE)]
        x, y = _thin(np.asarray(s.x, float), np.asarray(s.y, float))
        if plot.logy:
            y = np.log10(np.maximum(y, 1e-300))
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
        ly = MARGIN["top"] + 16 + 16 * k
        lx = MARGIN["left"] + pw - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(s.label)}</text>')
    for x, y, label in plot.markers:
        yy = np.log10(y) if plot.logy else y
        out.append(f'<circle cx="{px(x):.2f}" cy="{py(yy):.2f}" r="3" fill="black"/>')
        out.append(f'<text x="{px(x) + 5:.2f}" y="{py(yy) - 5:.2f}" font-size="10">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write(plot: Plot, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(plot))
