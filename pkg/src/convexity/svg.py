"""SVG 1.1 rendering of polygons, optionally coloring edges by a value.

Colors map linearly from blue (minimum) to red (maximum):
``rgb(round(255 t), 0, round(255 (1 - t)))`` with ``t = (v - min) / (max - min)``
(``t = 0.5`` when all values are equal).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .errors import BadParams, DimensionUnsupported
from .geometry import PolygonBoundary

CANVAS = 512.0


def _num(x: float) -> str:
    return f"{x:.6f}".rstrip("0").rstrip(".") if x != 0 else "0"


def edge_colors(values: Sequence[float]) -> list[str]:
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    t = np.full(len(v), 0.5) if hi == lo else (v - lo) / (hi - lo)
    return [f"rgb({int(round(255 * s))},0,{int(round(255 * (1 - s)))})" for s in t]


def render_svg(shape, values: Optional[Sequence[float]] = None) -> str:
    """Closed polygon path; with `values` (one per edge) edges are colored and a legend added."""
    if not isinstance(shape, PolygonBoundary):
        raise DimensionUnsupported("SVG output is only available for 2D polygons")
    v = np.asarray(shape.vertices, dtype=float)
    lo, hi = v.min(axis=0), v.max(axis=0)
    span = hi - lo
    pad = 0.05 * span
    vb_x, vb_y = lo[0] - pad[0], -(hi[1] + pad[1])
    vb_w, vb_h = span[0] + 2 * pad[0], span[1] + 2 * pad[1]
    stroke = _num(0.004 * max(vb_w, vb_h))
    # y is flipped so the drawing has the usual math orientation
    pts = [(_num(x), _num(-y)) for x, y in v]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(CANVAS)}" '
        f'height="{_num(CANVAS * vb_h / vb_w)}" '
        f'viewBox="{_num(vb_x)} {_num(vb_y)} {_num(vb_w)} {_num(vb_h)}">',
    ]
    if values is None:
        d = "M " + " L ".join(f"{x} {y}" for x, y in pts) + " Z"
        out.append(f'<path d="{d}" fill="none" stroke="black" stroke-width="{stroke}"/>')
    else:
        vals = np.asarray(values, dtype=float)
        if vals.shape != (len(v),):
            raise BadParams(f"expected {len(v)} edge values, got {vals.shape}")
        colors = edge_colors(vals)
        out.append(f'<g fill="none" stroke-width="{_num(2 * float(stroke))}" stroke-linecap="round">')
        for i, color in enumerate(colors):
            (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % len(pts)]
            out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}"/>')
        out.append("</g>")
        size = _num(0.04 * vb_h)
        lx = _num(vb_x + 0.02 * vb_w)
        out.append(
            f'<text x="{lx}" y="{_num(vb_y + 0.05 * vb_h)}" font-size="{size}" fill="rgb(0,0,255)">'
            f"min {float(vals.min()):.6g}</text>"
        )
        out.append(
            f'<text x="{lx}" y="{_num(vb_y + 0.10 * vb_h)}" font-size="{size}" fill="rgb(255,0,0)">'
            f"max {float(vals.max()):.6g}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
