"""Minimal static SVG line plots (no interactivity, no dependencies)."""

import math
from xml.sax.saxutils import escape

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def line_plot(path, x, series, xlabel="", ylabel="", title="", logy=False, width=640, height=420):
    """Write ``series`` (a list of ``(label, y)`` pairs) against ``x`` to ``path``."""
    left, right, top, bottom = 80, 20, 40, 60
    xs = [float(v) for v in x]

    def ty(v):
        v = float(v)
        if logy:
            return math.log10(v) if v > 0 else float("nan")
        return v

    ys_all = [ty(v) for _, ys in series for v in ys if math.isfinite(ty(v))]
    if not xs or not ys_all:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - left - right, height - top - bottom

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for i, (label, ys) in enumerate(series):
        pts = [f"{px(a):.2f},{py(ty(b)):.2f}" for a, b in zip(xs, ys) if math.isfinite(ty(b))]
        color = _COLORS[i % len(_COLORS)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        parts.append(f'<text x="{left + 10}" y="{top + 18 + 16 * i}" fill="{color}" font-size="12">'
                     f'{escape(label)}</text>')
    for v, anchor in ((x0, "start"), (x1, "end")):
        parts.append(f'<text x="{px(v):.1f}" y="{top + ph + 16}" font-size="11" text-anchor="{anchor}">{v:.4g}</text>')
    for v in (y0, y1):
        label = f"1e{v:.2f}" if logy else f"{v:.4g}"
        parts.append(f'<text x="{left - 6}" y="{py(v) + 4:.1f}" font-size="11" text-anchor="end">{label}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 15}" font-size="13" text-anchor="middle">'
                 f'{escape(xlabel)}</text>')
    parts.append(f'<text x="18" y="{top + ph / 2}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 18 {top + ph / 2})">{escape(ylabel)}</text>')
    if title:
        parts.append(f'<text x="{width / 2}" y="24" font-size="14" text-anchor="middle">{escape(title)}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
