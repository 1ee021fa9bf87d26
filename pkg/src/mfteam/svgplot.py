"""Minimal hand-rolled SVG line charts (no plotting dependency).

CSV is the canonical output of every command; these charts are a convenience
for eyeballing trajectories and convergence.
"""

from __future__ import annotations

import math

_W, _H = 800, 500
_ML, _MR, _MT, _MB = 60, 20, 30, 45


def _ticks(lo, hi, k=6):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / k))
    for m in (1, 2, 5, 10):
        if span / (step * m) <= k:
            step *= m
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * span:
        out.append(v)
        v += step
    return out


def line_chart(series, path, title="", xlabel="t", ylabel="", log_log=False):
    """Write an SVG line chart.

    series: list of (xs, ys, color, width) tuples.
    """
    if log_log:
        series = [
            ([math.log10(x) for x in xs], [math.log10(y) for y in ys], c, w)
            for xs, ys, c, w in series
        ]
    xmin = min(min(xs) for xs, *_ in series)
    xmax = max(max(xs) for xs, *_ in series)
    ymin = min(min(ys) for _, ys, *_ in series)
    ymax = max(max(ys) for _, ys, *_ in series)
    if ymax == ymin:
        ymin -= 0.5
        ymax += 0.5
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + (x - xmin) / (xmax - xmin) * pw if xmax > xmin else _ML + pw / 2

    def py(y):
        return _MT + (ymax - y) / (ymax - ymin) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>',
    ]
    for tv in _ticks(xmin, xmax):
        x = px(tv)
        label = f"{10 ** tv:g}" if log_log else f"{tv:g}"
        parts.append(
            f'<line x1="{x:.1f}" y1="{_MT}" x2="{x:.1f}" y2="{_MT + ph}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{_MT + ph + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{label}</text>'
        )
    for tv in _ticks(ymin, ymax):
        y = py(tv)
        label = f"{10 ** tv:.3g}" if log_log else f"{tv:g}"
        parts.append(
            f'<line x1="{_ML}" y1="{y:.1f}" x2="{_ML + pw}" y2="{y:.1f}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_ML - 6}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{label}</text>'
        )
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{_ML + pw / 2:.0f}" y="{_H - 8}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{_MT + ph / 2:.0f}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {_MT + ph / 2:.0f})">{ylabel}</text>'
    )
    for xs, ys, color, width in series:
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"/>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
