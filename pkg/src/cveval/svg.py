"""Standalone SVG line chart for CI-width trajectories."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

W, H, PAD = 480, 320, 48
SERIES = (("width_simple", "#d62728", "human only"), ("width_cv", "#1f77b4", "control variates"))


def line_chart(points: Sequence, title: str = "") -> str:
    ns = [p.n for p in points]
    top = max(max(p.width_simple, p.width_cv) for p in points) or 1.0
    lo, hi = min(ns), max(ns)
    span = (hi - lo) or 1

    def xy(n, w):
        x = PAD + (n - lo) / span * (W - 2 * PAD)
        y = H - PAD - w / top * (H - 2 * PAD)
        return f"{x:.2f},{y:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<text x="{W / 2}" y="{PAD / 2}" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="12">number of judgments</text>',
        f'<text x="{PAD - 6}" y="{PAD}" text-anchor="end" font-size="10">{top:.3g}</text>',
        f'<text x="{PAD}" y="{H - PAD + 14}" text-anchor="middle" font-size="10">{lo}</text>',
        f'<text x="{W - PAD}" y="{H - PAD + 14}" text-anchor="middle" font-size="10">{hi}</text>',
    ]
    for i, (attr, color, label) in enumerate(SERIES):
        pts = " ".join(xy(p.n, getattr(p, attr)) for p in points)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        parts.append(f'<text x="{W - PAD}" y="{PAD + 14 * (i + 1)}" text-anchor="end" font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
