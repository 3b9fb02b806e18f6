"""Minimal SVG line charts: axes, ticks, a legend and one polyline per series.

Output is plain text with fixed number formatting, so the same data always
produces the same bytes.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_chart"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 400
_LEFT, _RIGHT, _TOP, _BOTTOM = 64, 150, 36, 48


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    step = 10 ** np.floor(np.log10((hi - lo) / n))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= n:
            step *= mult
            break
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step * 1e-9, step)]


def _fmt(v):
    return f"{v:.6g}"


def line_chart(series, title="", xlabel="", ylabel="", hline=None, xlabels=None, desc=None) -> str:
    """Render ``series`` (mapping name -> (xs, ys)) as an SVG document.

    ``hline`` draws a dashed horizontal reference line (for example a
    significance threshold). ``xlabels`` optionally maps x positions to tick
    text, for charts indexed by opaque labels such as dates. ``desc`` is stored
    as the document's ``<desc>`` metadata.
    """
    if not series:
        raise ValueError("nothing to plot")
    pts = {}
    for name, (xs, ys) in series.items():
        xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
        if xs.shape != ys.shape:
            raise ValueError(f"series {name!r}: x and y differ in length")
        pts[name] = (xs, ys)
    allx = np.concatenate([p[0] for p in pts.values()])
    ally = np.concatenate([p[1] for p in pts.values()])
    ally = ally[np.isfinite(ally)]
    if hline is not None:
        ally = np.append(ally, hline)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = (float(ally.min()), float(ally.max())) if ally.size else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def sx(v):
        return _LEFT + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return _TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_LEFT + pw / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{_LEFT}" y1="{_TOP + ph}" x2="{_LEFT + pw}" y2="{_TOP + ph}" stroke="black"/>',
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_TOP + ph}" stroke="black"/>',
    ]
    if desc:
        out.insert(1, f"<desc>{escape(desc)}</desc>")
    for v in _ticks(x0, x1):
        label = xlabels.get(int(round(v)), "") if xlabels else _fmt(v)
        out.append(f'<line x1="{sx(v):.2f}" y1="{_TOP + ph}" x2="{sx(v):.2f}" y2="{_TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(v):.2f}" y="{_TOP + ph + 16}" text-anchor="middle">{escape(str(label))}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<line x1="{_LEFT - 4}" y1="{sy(v):.2f}" x2="{_LEFT}" y2="{sy(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 6}" y="{sy(v) + 4:.2f}" text-anchor="end">{_fmt(v)}</text>')
    out.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_H - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{_TOP + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 16 {_TOP + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    if hline is not None:
        out.append(
            f'<line x1="{_LEFT}" y1="{sy(hline):.2f}" x2="{_LEFT + pw}" y2="{sy(hline):.2f}" stroke="gray" stroke-dasharray="4 3"/>'
        )
    for i, (name, (xs, ys)) in enumerate(pts.items()):
        color = _COLORS[i % len(_COLORS)]
        ok = np.isfinite(ys)
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs[ok], ys[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = _TOP + 14 + 16 * i
        out.append(f'<line x1="{_LEFT + pw + 12}" y1="{ly - 4}" x2="{_LEFT + pw + 32}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_LEFT + pw + 36}" y="{ly}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
