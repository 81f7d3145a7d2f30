"""SVG 1.1 pictures of planar patterns, forests and crossing surfaces."""

from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import quoteattr

import numpy as np

from .flow import crossing_set
from .geometry import DIRECTED, CrossingSurface, Domain
from .navigation import DEAD_END, NavigationForest


class UnsupportedRender(ValueError):
    pass


STYLE = (
    ".node{fill:#333}"
    ".node.crossing{fill:#d62728}"
    ".link{stroke:#777;fill:none}"
    ".surface{stroke:#1f77b4;fill:none}"
    ".trajectory{stroke:#2ca02c;fill:none}"
    ".origin{stroke:#000;fill:none}"
    ".domain{stroke:#bbb;fill:none}"
)


def _num(v: float) -> str:
    return format(float(v), ".6g")


def _xy(p, flip: bool = True):
    # SVG's y axis points down
    return _num(p[0]), _num(-p[1] if flip else p[1])


def render_svg(points, forest: NavigationForest = None, domain: Domain = None, s: float = 1.0,
               surface: Optional[CrossingSurface] = None,
               trajectory: Optional[Sequence[int]] = None,
               node_radius: Optional[float] = None) -> str:
    """SVG document whose viewBox is the bounding box of ``sD``.

    Nodes are ``<circle class="node">``; crossing-set members also get the
    ``crossing`` class.  Each live link is a ``<line class="link">``; the
    surface is a ``<path class="surface">`` and the optional trajectory a
    ``<polyline class="trajectory">``.
    """
    pts = np.asarray(points if forest is None else forest.points, dtype=float)
    if pts.ndim != 2:
        pts = pts.reshape(0, 2)
    d = pts.shape[1] if pts.size else (domain.d if domain is not None else 2)
    if d != 2:
        raise UnsupportedRender("only planar patterns can be rendered")
    if domain is not None:
        hw = domain.bounding_half_widths(s)
    elif len(pts):
        hw = np.maximum(np.abs(pts).max(axis=0), 1e-9) * 1.05
    else:
        hw = np.ones(2)
    w, h = 2 * hw[0], 2 * hw[1]
    if node_radius is None:
        node_radius = 0.15 * math.sqrt(w * h / max(len(pts), 1))
        node_radius = min(node_radius, 0.01 * max(w, h)) if len(pts) else 0.01 * max(w, h)
    stroke = node_radius / 3

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{_num(-hw[0])} {_num(-hw[1])} {_num(w)} {_num(h)}">',
        f"<style>{STYLE} line,path,polyline{{stroke-width:{_num(stroke)}}}</style>",
    ]
    if domain is not None:
        if domain.kind == "box":
            out.append(f'<rect class="domain" x="{_num(-hw[0])}" y="{_num(-hw[1])}" '
                       f'width="{_num(w)}" height="{_num(h)}"/>')
        else:
            out.append(f'<circle class="domain" cx="0" cy="0" r="{_num(s * domain.radius)}"/>')

    crossing = set()
    if forest is not None:
        if surface is not None:
            crossing = set(crossing_set(forest, surface).members.tolist())
        tgt = forest.targets()
        for i in range(len(forest)):
            if forest.successor[i] == DEAD_END:
                continue
            (x1, y1), (x2, y2) = _xy(pts[i]), _xy(tgt[i])
            out.append(f'<line class="link" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
        if forest.mode != DIRECTED:
            r = 2 * node_radius
            out.append(f'<path class="origin" d="M {_num(-r)} 0 L {_num(r)} 0 M 0 {_num(-r)} L 0 {_num(r)}"/>')

    if surface is not None:
        out.append(f'<path class="surface" d={quoteattr(_surface_path(surface, hw))}/>')

    if trajectory is not None and forest is not None and len(trajectory):
        path = [pts[j] for j in trajectory]
        last = int(trajectory[-1])
        if forest.successor[last] < 0 and forest.successor[last] != DEAD_END:
            path.append(np.zeros(2))
        coords = " ".join(",".join(_xy(p)) for p in path)
        out.append(f'<polyline class="trajectory" points="{coords}"/>')

    for i, p in enumerate(pts):
        cls = "node crossing" if i in crossing else "node"
        cx, cy = _xy(p)
        out.append(f'<circle class="{cls}" cx="{cx}" cy="{cy}" r="{_num(node_radius)}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _surface_path(surface: CrossingSurface, hw) -> str:
    c = surface.center
    g = surface.g
    if surface.mode == DIRECTED:
        half = g if math.isfinite(g) else hw[1]
        a, b = (c[0], c[1] - half), (c[0], c[1] + half)
        return f"M {' '.join(_xy(a))} L {' '.join(_xy(b))}"
    R = surface.radius
    phi = math.atan2(c[1], c[0])
    if math.isfinite(g):
        half = 2 * math.asin(g / (2 * R))
    else:
        half = math.pi * (1 - 1e-9)
    a = (R * math.cos(phi - half), R * math.sin(phi - half))
    b = (R * math.cos(phi + half), R * math.sin(phi + half))
    large = 1 if half > math.pi / 2 else 0
    # counter-clockwise in the plane is clockwise after the y flip
    return f"M {' '.join(_xy(a))} A {_num(R)} {_num(R)} 0 {large} 0 {' '.join(_xy(b))}"
