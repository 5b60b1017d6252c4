"""Minimal SVG line charts (polylines and text, nothing else)."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#c0392b", "#2c6fbb", "#2e8b57", "#8e44ad")
DASHES = ("", "6,4", "2,3", "8,3,2,3")


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, count)


def line_chart(series, title: str = "", xlabel: str = "x", ylabel: str = "",
               width: int = 640, height: int = 400) -> str:
    """Render ``series`` (list of ``(label, x, y)``) as an SVG document string."""
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom
    xs = [np.asarray(s[1], dtype=float) for s in series]
    ys = [np.asarray(s[2], dtype=float) for s in series]
    xall = np.concatenate(xs) if xs else np.zeros(1)
    yall = np.concatenate(ys) if ys else np.zeros(1)
    x0, x1 = float(np.min(xall)), float(np.max(xall))
    y0, y1 = float(np.min(yall)), float(np.max(yall))
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12 * max(1.0, abs(y0)):
        pad = max(0.5, 0.1 * abs(y0))
        y0, y1 = y0 - pad, y1 + pad
    else:
        pad = 0.05 * (y1 - y0)
        y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (np.asarray(x) - x0) / (x1 - x0) * pw

    def py(y):
        return top + (y1 - np.asarray(y)) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    for i, (label, x, y) in enumerate(series):
        pts = np.column_stack([px(x), py(y)])
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
        dash = DASHES[i % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{coords}"/>')
        ly = top + 16 + 16 * i
        out.append(f'<line x1="{left + pw - 110}" y1="{ly - 4}" x2="{left + pw - 85}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{left + pw - 80}" y="{ly}">{escape(label)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_chart(path, series, **kwargs) -> None:
    Path(path).write_text(line_chart(series, **kwargs))
