"""Minimal deterministic SVG charts."""

from __future__ import annotations

import re
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 360
MARGIN = {"left": 170, "right": 30, "top": 40, "bottom": 50}
COLORS = {"low": "#4c72b0", "moderate": "#dd8452", "high": "#c44e52"}


def slug(name: str) -> str:
    s = re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower()
    return s or "unnamed"


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">'
        f'{escape(title)}</text>',
    ]


def bar_chart(labels, values, title: str) -> str:
    """Horizontal bars on a fixed [0, 1] axis."""
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = MARGIN["top"], HEIGHT - MARGIN["bottom"]
    band = (y1 - y0) / max(len(labels), 1)
    out = _header(title)
    for tick in range(6):
        v = tick / 5
        x = x0 + v * (x1 - x0)
        out.append(f'<line x1="{x:.1f}" y1="{y0}" x2="{x:.1f}" y2="{y1}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.1f}" y="{y1 + 16}" text-anchor="middle">{v:.1f}</text>')
    for i, (lab, val) in enumerate(zip(labels, values)):
        y = y0 + i * band + 0.15 * band
        w = max(0.0, min(1.0, float(val))) * (x1 - x0)
        out.append(f'<rect x="{x0}" y="{y:.1f}" width="{w:.1f}" height="{0.7 * band:.1f}" '
                   f'fill="#4c72b0"/>')
        out.append(f'<text x="{x0 - 6}" y="{y + 0.45 * band:.1f}" text-anchor="end">'
                   f'{escape(str(lab))}</text>')
        out.append(f'<text x="{x0 + w + 4:.1f}" y="{y + 0.45 * band:.1f}">{float(val):.4f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def membership_chart(terms: dict, title: str, centroid: float | None = None) -> str:
    """Three triangular membership functions given as {term: [a, b, c]}."""
    x0, x1 = 60, WIDTH - MARGIN["right"]
    y0, y1 = MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def px(v):
        return x0 + v * (x1 - x0)

    def py(mu):
        return y1 - mu * (y1 - y0)

    out = _header(title)
    out.append(f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for tick in range(6):
        v = tick / 5
        out.append(f'<text x="{px(v):.1f}" y="{y1 + 16}" text-anchor="middle">{v:.1f}</text>')
    out.append(f'<text x="{x0 - 8}" y="{py(1.0) + 4:.1f}" text-anchor="end">1</text>')
    out.append(f'<text x="{x0 - 8}" y="{py(0.0) + 4:.1f}" text-anchor="end">0</text>')
    for i, (term, (a, b, c)) in enumerate(terms.items()):
        pts = [(a, 0.0), (b, 1.0), (c, 0.0)]
        if a == b:
            pts[0] = (a, 1.0)
        if b == c:
            pts[2] = (c, 1.0)
        pts = [(a, 0.0)] + pts + [(c, 0.0)]
        path = " ".join(f"{px(x):.2f},{py(m):.2f}" for x, m in pts)
        color = COLORS.get(term, "black")
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x1 - 90}" y="{y0 + 16 * (i + 1)}" fill="{color}">'
                   f'{escape(term)}</text>')
    if centroid is not None:
        out.append(f'<line x1="{px(centroid):.2f}" y1="{y0}" x2="{px(centroid):.2f}" '
                   f'y2="{y1}" stroke="black" stroke-dasharray="4 3"/>')
        out.append(f'<text x="{px(centroid) + 4:.2f}" y="{y0 + 12}">centroid '
                   f'{centroid:.3f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
