"""Plain SVG 1.1 output for packings and packing pairs.

Coordinates are written with a fixed number of decimals so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from cpapprox.cpmap import CpMap
from cpapprox.solver import PackingSolution

CIRCLE_STYLE = 'fill="none" stroke="#1f3b73" stroke-width="{w}"'
BRANCH_STYLE = 'fill="#f2b134" fill-opacity="0.5" stroke="#b3541e" stroke-width="{w}"'
EDGE_STYLE = 'stroke="#9aa5b1" stroke-width="{w}"'


class OverlapDetected(ValueError):
    """Two circle interiors of a packing meant to be univalent overlap."""


def overlap_audit(solution: PackingSolution, tol: float | None = None) -> float:
    """Largest overlap ``r_i + r_j - |c_i - c_j|`` over all circle pairs (<= 0 when disjoint)."""
    c = np.column_stack([solution.centers.real, solution.centers.imag])
    r = solution.radii
    tree = cKDTree(c)
    pairs = tree.query_pairs(2.0 * float(r.max()), output_type="ndarray")
    if not len(pairs):
        return -np.inf
    i, j = pairs[:, 0], pairs[:, 1]
    return float(np.max(r[i] + r[j] - np.hypot(*(c[i] - c[j]).T)))


def _body(solution: PackingSolution, dx: float, edges: bool, scale: float) -> list[str]:
    cx = solution.complex
    c, r = solution.centers, solution.radii
    w = 0.6 / scale
    out = []
    if edges:
        for a, b in cx.edges.tolist():
            pa, pb = c[a], c[b]
            out.append(
                f'<line x1="{pa.real + dx:.6f}" y1="{-pa.imag:.6f}" '
                f'x2="{pb.real + dx:.6f}" y2="{-pb.imag:.6f}" {EDGE_STYLE.format(w=f"{0.5 * w:.6f}")}/>'
            )
    branch = set(solution.branch.vertices)
    for v in range(cx.num_vertices):
        style = BRANCH_STYLE if v in branch else CIRCLE_STYLE
        out.append(
            f'<circle cx="{c[v].real + dx:.6f}" cy="{-c[v].imag:.6f}" r="{r[v]:.6f}" '
            f'{style.format(w=f"{w:.6f}")}/>'
        )
    return out


def _bbox(solution: PackingSolution) -> tuple[float, float, float, float]:
    c, r = solution.centers, solution.radii
    return (
        float(np.min(c.real - r)),
        float(np.min(-c.imag - r)),
        float(np.max(c.real + r)),
        float(np.max(-c.imag + r)),
    )


def render_svg(
    solution: PackingSolution | CpMap,
    edges: bool = False,
    width: int = 800,
    audit_tol: float = 1e-9,
) -> str:
    """SVG of one packing, or of a cp-map's source and target side by side.

    Unbranched packings are checked for overlapping circles first, and
    :class:`OverlapDetected` is raised instead of drawing an invalid packing.
    """
    panels = [solution.source, solution.target] if isinstance(solution, CpMap) else [solution]
    for p in panels:
        if not p.branch:
            worst = overlap_audit(p)
            if worst > audit_tol:
                raise OverlapDetected(f"circles overlap by {worst:.3e}")

    gap = 0.0
    boxes = [_bbox(p) for p in panels]
    if len(panels) == 2:
        gap = 0.1 * max(b[2] - b[0] for b in boxes)
    shifts, x = [], 0.0
    for b in boxes:
        shifts.append(x - b[0])
        x += b[2] - b[0] + gap
    total_w = x - gap
    y0 = min(b[1] for b in boxes)
    total_h = max(b[3] for b in boxes) - y0
    pad = 0.02 * max(total_w, total_h)
    scale = width / (total_w + 2 * pad)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{int(round((total_h + 2 * pad) * scale))}" '
        f'viewBox="{-pad:.6f} {y0 - pad:.6f} {total_w + 2 * pad:.6f} {total_h + 2 * pad:.6f}">',
        '<rect x="{:.6f}" y="{:.6f}" width="{:.6f}" height="{:.6f}" fill="white"/>'.format(
            -pad, y0 - pad, total_w + 2 * pad, total_h + 2 * pad
        ),
    ]
    for p, dx in zip(panels, shifts):
        lines.append("<g>")
        lines.extend(_body(p, dx, edges, scale))
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
