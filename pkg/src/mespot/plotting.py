"""Dependency-free SVG rendering of DET curves."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .evaluation import DetCurve, reference_point

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
WIDTH, HEIGHT = 720, 480
MARGIN = dict(left=70, right=250, top=40, bottom=60)


def legend_order(curves: Sequence[tuple[str, DetCurve]], reference_x: float) -> list[int]:
    """Indices of ``curves`` sorted by miss rate at ``reference_x`` (lower first)."""
    refs = [reference_point(c, reference_x) for _, c in curves]
    return sorted(range(len(curves)), key=lambda i: (refs[i], i))


def render_det_svg(
    curves: Sequence[tuple[str, DetCurve]], reference_x: float, title: str = "", x_label: str | None = None
) -> str:
    if not curves:
        raise ValueError("no curves to plot")
    kind = curves[0][1].kind
    x_label = x_label or ("false positives per window" if kind == "per_window" else "false positives per video")
    x_max = max([reference_x] + [max((p[0] for p in c.points), default=0.0) for _, c in curves])
    x_max = x_max if x_max > 0 else 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + pw * x / x_max

    def sy(y):
        return MARGIN["top"] + ph * (1.0 - y)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>')
    for k in range(6):
        xv, yv = x_max * k / 5, k / 5
        out.append(f'<text x="{sx(xv):.1f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle" font-size="11">{xv:.2g}</text>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{sy(yv) + 4:.1f}" text-anchor="end" font-size="11">{yv:.1f}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle" font-size="13">{escape(x_label)}</text>')
    out.append(
        f'<text x="18" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {MARGIN["top"] + ph / 2})">miss rate</text>'
    )
    rx = sx(reference_x)
    out.append(
        f'<line x1="{rx:.1f}" y1="{MARGIN["top"]}" x2="{rx:.1f}" y2="{MARGIN["top"] + ph}" '
        f'stroke="#999" stroke-dasharray="4 3"/>'
    )

    for i, (_, c) in enumerate(curves):
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in c.points)
        out.append(f'<polyline fill="none" stroke="{COLORS[i % len(COLORS)]}" stroke-width="2" points="{pts}"/>')

    lx = MARGIN["left"] + pw + 15
    out.append(f'<text x="{lx}" y="{MARGIN["top"] + 4}" font-size="11">ordered by performance (lower is better)</text>')
    out.append(f'<text x="{lx}" y="{MARGIN["top"] + 18}" font-size="11">miss rate at {reference_x:g}</text>')
    for row, i in enumerate(legend_order(curves, reference_x)):
        label, c = curves[i]
        y = MARGIN["top"] + 38 + 18 * row
        color = COLORS[i % len(COLORS)]
        out.append(f'<line x1="{lx}" y1="{y - 4}" x2="{lx + 20}" y2="{y - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text class="legend" x="{lx + 26}" y="{y}" font-size="11">'
            f"{escape(label)} ({100 * reference_point(c, reference_x):.2f}%)</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_det_plot(curves: Sequence[tuple[str, DetCurve]], out_path, reference_x: float = 0.4, title: str = "") -> Path:
    svg = render_det_svg(curves, reference_x, title)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(svg, encoding="utf-8")
    return out_path
