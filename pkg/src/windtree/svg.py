"""Figure-style SVG output: the obstacle lattice inside a trajectory's
bounding box, the exact polyline, and highlighted repeat obstacles for
escaping orbits.

All coordinates are formatted with a fixed precision so that the same
input yields byte-identical files.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil, floor

from .billiard import TracedPath
from .exact import Params


def _fmt(value) -> str:
    return f"{float(value):.6f}"


def render_trajectory(params: Params, path: TracedPath, scale: int = 60,
                      highlight_cells: tuple = (), margin: int = 1) -> str:
    """SVG 1.1 document for a traced polyline on the obstacle lattice.

    The y axis is flipped to screen convention.  Cells listed in
    ``highlight_cells`` (lattice pairs) are filled gray, marking the
    obstacles an escaping orbit hits at the same spot.
    """
    xs = [p.x for p in path.points]
    ys = [p.y for p in path.points]
    x_lo, x_hi = floor(min(xs)) - margin, ceil(max(xs)) + margin
    y_lo, y_hi = floor(min(ys)) - margin, ceil(max(ys)) + margin
    a2, b2 = params.a / 2, params.b / 2
    pad = Fraction(1, 2)  # keeps the outermost obstacles inside the canvas

    def sx(x):
        return _fmt((x - x_lo + pad) * scale)

    def sy(y):
        return _fmt((y_hi + pad - y) * scale)

    width = _fmt((x_hi - x_lo + 2 * pad) * scale)
    height = _fmt((y_hi - y_lo + 2 * pad) * scale)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    highlighted = set(highlight_cells)
    for n in range(y_lo, y_hi + 1):
        for m in range(x_lo, x_hi + 1):
            fill = "#b0b0b0" if (m, n) in highlighted else "none"
            lines.append(
                f'<rect x="{sx(m - a2)}" y="{sy(n + b2)}" '
                f'width="{_fmt(params.a * scale)}" '
                f'height="{_fmt(params.b * scale)}" '
                f'fill="{fill}" stroke="black" stroke-width="1"/>')
    if path.points:
        coords = " L ".join(f"{sx(p.x)} {sy(p.y)}" for p in path.points)
        color = "#c03030" if path.singular else "#2040c0"
        lines.append(f'<path d="M {coords}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        start = path.points[0]
        lines.append(f'<circle cx="{sx(start.x)}" cy="{sy(start.y)}" r="3" '
                     f'fill="#208020"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
