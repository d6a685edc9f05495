"""Minimal SVG line charts: axes, one polyline per series, legend and labels."""

from __future__ import annotations

from html import escape
from pathlib import Path

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
MAX_POINTS = 2000


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def line_chart(
    series,
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 720,
    height: int = 360,
) -> str:
    """Render ``series`` (iterable of ``(label, x, y)``) as an SVG document string."""
    series = [(lab, np.asarray(x, float), np.asarray(y, float)) for lab, x, y in series]
    finite = [np.isfinite(y) for _, _, y in series]
    xs = np.concatenate([x for _, x, _ in series])
    ys = np.concatenate([y[f] for (_, _, y), f in zip(series, finite)])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    left, right, top, bottom = 70, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return top + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        out.append(f'<line x1="{px(tx):.1f}" y1="{top + ph}" x2="{px(tx):.1f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(tx):.1f}" y="{top + ph + 18}" text-anchor="middle">{_fmt(tx)}</text>')
    for ty in _ticks(y_lo, y_hi):
        out.append(f'<line x1="{left - 5}" y1="{py(ty):.1f}" x2="{left}" y2="{py(ty):.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(ty) + 4:.1f}" text-anchor="end">{_fmt(ty)}</text>')
    for i, ((label, x, y), ok) in enumerate(zip(series, finite)):
        stride = max(1, int(np.ceil(len(x) / MAX_POINTS)))
        idx = np.arange(0, len(x), stride)
        idx = idx[ok[idx]]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[idx], y[idx]))
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 15 + 15 * i
        out.append(f'<line x1="{left + 10}" y1="{ly - 4}" x2="{left + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 35}" y="{ly}">{escape(label)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {top + ph / 2})">{escape(ylabel)}</text>'
    )
    out.append(f'<text x="{left + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_chart(path, series, **kwargs) -> None:
    Path(path).write_text(line_chart(series, **kwargs))
