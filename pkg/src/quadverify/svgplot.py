"""Native SVG emission for reachtube envelopes.

Deliberately dependency-free: the artifacts are static envelope plots, and
keeping them a pure function of the tube data makes them byte-reproducible.
"""

import math

W, H = 800, 420
ML, MR, MT, MB = 60, 20, 36, 44


def _fmt(x):
    return f"{x:.6g}"


def _ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    t0 = step * math.ceil(lo / step)
    out = []
    t = t0
    while t <= hi + 1e-12 * span:
        out.append(round(t, 12))
        t += step
    return out


def tube_svg(ts, lo, hi, ref=None, title="", ylabel="z (m)"):
    """SVG string: shaded tube envelope vs time, optional reference line."""
    tmin, tmax = float(ts[0]), float(ts[-1])
    ymin = min(float(min(lo)), float(min(ref)) if ref is not None else 1e30)
    ymax = max(float(max(hi)), float(max(ref)) if ref is not None else -1e30)
    pad = 0.05 * (ymax - ymin or 1.0)
    ymin, ymax = ymin - pad, ymax + pad

    def sx(t):
        return ML + (t - tmin) / (tmax - tmin or 1.0) * (W - ML - MR)

    def sy(y):
        return MT + (ymax - y) / (ymax - ymin or 1.0) * (H - MT - MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W // 2}" y="20" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>',
    ]
    # envelope polygon: hi forward, lo backward
    pts = [f"{_fmt(sx(t))},{_fmt(sy(y))}" for t, y in zip(ts, hi)]
    pts += [f"{_fmt(sx(t))},{_fmt(sy(y))}" for t, y in zip(ts[::-1], lo[::-1])]
    parts.append(f'<polygon points="{" ".join(pts)}" fill="#9ecae1" '
                 f'fill-opacity="0.6" stroke="#3182bd" stroke-width="1"/>')
    if ref is not None:
        rp = " ".join(f"{_fmt(sx(t))},{_fmt(sy(y))}" for t, y in zip(ts, ref))
        parts.append(f'<polyline points="{rp}" fill="none" stroke="#d62728" '
                     f'stroke-width="1.5" stroke-dasharray="6,4"/>')
    # axes
    x0, y0 = ML, H - MB
    parts.append(f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{y0}" '
                 f'stroke="black"/>')
    parts.append(f'<line x1="{ML}" y1="{y0}" x2="{W - MR}" y2="{y0}" '
                 f'stroke="black"/>')
    for t in _ticks(tmin, tmax):
        parts.append(f'<line x1="{_fmt(sx(t))}" y1="{y0}" x2="{_fmt(sx(t))}" '
                     f'y2="{y0 + 5}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(sx(t))}" y="{y0 + 18}" '
                     f'text-anchor="middle" font-size="11" '
                     f'font-family="sans-serif">{_fmt(t)}</text>')
    for y in _ticks(ymin, ymax):
        parts.append(f'<line x1="{x0 - 5}" y1="{_fmt(sy(y))}" x2="{x0}" '
                     f'y2="{_fmt(sy(y))}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{_fmt(sy(y))}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif" '
                     f'dominant-baseline="middle">{_fmt(y)}</text>')
    parts.append(f'<text x="{W // 2}" y="{H - 8}" text-anchor="middle" '
                 f'font-size="12" font-family="sans-serif">t (s)</text>')
    parts.append(f'<text x="16" y="{H // 2}" text-anchor="middle" '
                 f'font-size="12" font-family="sans-serif" '
                 f'transform="rotate(-90 16 {H // 2})">{ylabel}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
