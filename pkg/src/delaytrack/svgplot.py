"""Dependency-free SVG line plots (polylines, axes, tick labels).

Deliberately minimal: enough to render root-locus and damping curves from
the command line without pulling in a plotting stack.
"""

from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 36, 48


def _nice_ticks(lo, hi, n=6):
    if not math.isfinite(lo) or not math.isfinite(hi):
        return [0.0, 1.0]
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks or [lo, hi]


def _fmt(v):
    return f"{v:.6g}"


class _Axes:
    def __init__(self, xlim, ylim, width, height):
        self.xlim, self.ylim = xlim, ylim
        self.width, self.height = width, height
        self.x0, self.x1 = _MARGIN_L, width - _MARGIN_R
        self.y0, self.y1 = height - _MARGIN_B, _MARGIN_T

    def px(self, x):
        a, b = self.xlim
        return self.x0 + (x - a) / (b - a) * (self.x1 - self.x0)

    def py(self, y):
        a, b = self.ylim
        return self.y0 + (y - a) / (b - a) * (self.y1 - self.y0)


def _pad(lo, hi):
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_plot(series, title="", xlabel="", ylabel="", markers=(),
              width=720, height=480):
    """Render labelled polylines as an SVG document string.

    ``series`` is a sequence of (xs, ys, label); ``markers`` a sequence of
    (x, y, label) drawn as annotated circles.
    """
    xs_all = [x for xs, _, _ in series for x in xs]
    ys_all = [y for _, ys, _ in series for y in ys]
    xs_all += [m[0] for m in markers]
    ys_all += [m[1] for m in markers]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    ax = _Axes(
        _pad(min(xs_all), max(xs_all)),
        _pad(min(ys_all), max(ys_all)),
        width, height,
    )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    font = 'font-family="sans-serif" font-size="12"'

    # grid and tick labels
    for t in _nice_ticks(*ax.xlim):
        x = ax.px(t)
        parts.append(
            f'<line x1="{x:.2f}" y1="{ax.y0:.2f}" x2="{x:.2f}" '
            f'y2="{ax.y1:.2f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{ax.y0 + 16:.2f}" {font} '
            f'text-anchor="middle">{_fmt(t)}</text>'
        )
    for t in _nice_ticks(*ax.ylim):
        y = ax.py(t)
        parts.append(
            f'<line x1="{ax.x0:.2f}" y1="{y:.2f}" x2="{ax.x1:.2f}" '
            f'y2="{y:.2f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{ax.x0 - 6:.2f}" y="{y + 4:.2f}" {font} '
            f'text-anchor="end">{_fmt(t)}</text>'
        )

    # zero axes when visible
    if ax.xlim[0] < 0.0 < ax.xlim[1]:
        x = ax.px(0.0)
        parts.append(
            f'<line x1="{x:.2f}" y1="{ax.y0:.2f}" x2="{x:.2f}" '
            f'y2="{ax.y1:.2f}" stroke="#888888"/>'
        )
    if ax.ylim[0] < 0.0 < ax.ylim[1]:
        y = ax.py(0.0)
        parts.append(
            f'<line x1="{ax.x0:.2f}" y1="{y:.2f}" x2="{ax.x1:.2f}" '
            f'y2="{y:.2f}" stroke="#888888"/>'
        )

    # frame
    parts.append(
        f'<rect x="{ax.x0:.2f}" y="{ax.y1:.2f}" '
        f'width="{ax.x1 - ax.x0:.2f}" height="{ax.y0 - ax.y1:.2f}" '
        f'fill="none" stroke="black"/>'
    )

    for i, (xs, ys, label) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(
            f"{ax.px(x):.2f},{ax.py(y):.2f}" for x, y in zip(xs, ys)
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        if label:
            parts.append(
                f'<text x="{ax.x1 - 8:.2f}" y="{ax.y1 + 16 + 16 * i:.2f}" '
                f'{font} text-anchor="end" fill="{color}">{label}</text>'
            )

    for mx, my, mlabel in markers:
        parts.append(
            f'<circle cx="{ax.px(mx):.2f}" cy="{ax.py(my):.2f}" r="4" '
            f'fill="none" stroke="#d62728" stroke-width="1.5"/>'
        )
        if mlabel:
            parts.append(
                f'<text x="{ax.px(mx) + 6:.2f}" y="{ax.py(my) - 6:.2f}" '
                f'{font} fill="#d62728">{mlabel}</text>'
            )

    if title:
        parts.append(
            f'<text x="{width / 2:.2f}" y="20" {font} font-size="15" '
            f'text-anchor="middle">{title}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{(ax.x0 + ax.x1) / 2:.2f}" y="{height - 10:.2f}" '
            f'{font} text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="16" y="{(ax.y0 + ax.y1) / 2:.2f}" {font} '
            f'text-anchor="middle" '
            f'transform="rotate(-90 16 {(ax.y0 + ax.y1) / 2:.2f})">'
            f"{ylabel}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts)
