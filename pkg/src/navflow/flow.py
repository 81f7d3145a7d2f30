"""Trajectories, traffic flow, crossing sets and the sub-ballisticity events."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .geometry import (DIRECTED, RADIAL, CrossingSurface, Domain, erode_domain,
                       segment_crossing)
from .navigation import DEAD_END, ORIGIN_SINK, NavigationForest, _pad3


class ForestCorruption(RuntimeError):
    pass


def trajectory(i: int, forest: NavigationForest) -> list:
    """Node indices ``i, A(i), A(A(i)), ...`` until a dead end or the origin sink."""
    n = len(forest)
    out = [int(i)]
    j = int(forest.successor[i])
    while j >= 0:
        if len(out) > n:
            raise ForestCorruption(f"cycle on the trajectory of node {i}")
        out.append(j)
        j = int(forest.successor[j])
    return out


def accumulate_traffic(forest: NavigationForest, rates) -> np.ndarray:
    """Traffic flow per node: own rate plus everything routed through it."""
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (len(forest),):
        raise ValueError("one rate per node expected")
    if np.any(rates < 0):
        raise ValueError("rates must be nonnegative")
    if len(forest) == 0:
        return rates.copy()
    return K.accumulate(forest.topological_order(), forest.successor, rates)


def traffic_by_enumeration(forest: NavigationForest, rates) -> np.ndarray:
    """Reference traffic flow summing rates over explicitly walked trajectories."""
    rates = np.asarray(rates, dtype=float)
    delta = np.zeros(len(forest))
    for j in range(len(forest)):
        for i in trajectory(j, forest):
            delta[i] += rates[j]
    return delta


# ---------------------------------------------------------------------------
# Crossing sets
# ---------------------------------------------------------------------------


@dataclass
class CrossingSet:
    members: np.ndarray
    points: np.ndarray

    def __len__(self):
        return len(self.members)


def crossing_set(forest: NavigationForest, surface: CrossingSurface) -> CrossingSet:
    """Nodes whose link ``[X_i, A(X_i)]`` meets the surface, with the meeting points."""
    if (surface.mode == DIRECTED) != (forest.mode == DIRECTED):
        raise ValueError("surface mode does not match the forest")
    pts = forest.points
    succ = forest.successor
    if len(pts) == 0:
        return CrossingSet(np.zeros(0, dtype=np.int64), np.zeros((0, surface.d)))
    tgt = forest.targets()
    live = succ != DEAD_END
    center = surface.center
    g = surface.g
    if surface.mode == DIRECTED:
        c = center[0]
        cand = live & (pts[:, 0] <= c) & (tgt[:, 0] > c)
    else:
        R = surface.radius
        n_a = np.sqrt(np.einsum("ij,ij->i", pts, pts))
        n_b = np.sqrt(np.einsum("ij,ij->i", tgt, tgt))
        # segment can only meet the sphere if it spans radius R
        cand = live & (np.maximum(n_a, n_b) >= R * (1 - 1e-12))
    if math.isfinite(g):
        lo = np.minimum(pts, tgt)
        hi = np.maximum(pts, tgt)
        gap = np.maximum(lo - center, 0) + np.maximum(center - hi, 0)
        cand &= np.einsum("ij,ij->i", gap, gap) <= g * g * (1 + 1e-9)
    members = []
    hits = []
    for i in np.flatnonzero(cand):
        p = segment_crossing(pts[i], tgt[i], surface)
        if p is not None:
            members.append(i)
            hits.append(p)
    return CrossingSet(np.asarray(members, dtype=np.int64),
                       np.asarray(hits).reshape(-1, surface.d))


def crossing_set_bruteforce(forest: NavigationForest, surface: CrossingSurface) -> CrossingSet:
    members = []
    hits = []
    for i in range(len(forest)):
        if forest.successor[i] == DEAD_END:
            continue
        p = segment_crossing(forest.points[i], forest.target(i), surface)
        if p is not None:
            members.append(i)
            hits.append(p)
    return CrossingSet(np.asarray(members, dtype=np.int64),
                       np.asarray(hits).reshape(-1, surface.d))


def sphere_crossing_counts(forest: NavigationForest, R: float):
    """Per trajectory: number of links crossing ``|y| = R`` exactly once, and dipping chords.

    A link crosses exactly once when it starts at norm >= R and ends below
    R.  Links with both endpoints outside can dip inside (two roots); they
    are counted separately.
    """
    pts = forest.points
    tgt = forest.targets()
    live = forest.successor != DEAD_END
    fa = np.einsum("ij,ij->i", pts, pts) - R * R
    fb = np.einsum("ij,ij->i", tgt, tgt) - R * R
    single = live & (fa >= 0) & (fb < 0)
    v = tgt - pts
    qa = np.einsum("ij,ij->i", v, v)
    hb = np.einsum("ij,ij->i", pts, v)
    with np.errstate(invalid="ignore", divide="ignore"):
        tmin = np.where(qa > 0, -hb / qa, 0.0)
    disc = hb * hb - qa * fa
    dip = live & (fa >= 0) & (fb >= 0) & (tmin > 0) & (tmin < 1) & (disc > 0)
    order = forest.topological_order()[::-1].astype(np.int64)
    succ = forest.successor
    n_single = K.path_reduce(order, succ, single.astype(np.float64), 0)
    n_dip = K.path_reduce(order, succ, dip.astype(np.float64), 0)
    return n_single.astype(np.int64), n_dip.astype(np.int64)


# ---------------------------------------------------------------------------
# Deviations and events
# ---------------------------------------------------------------------------


def _clip_all(a: np.ndarray, b: np.ndarray, region: Domain):
    """Vectorized clip of segments ``[a_i, b_i]`` to a closed box or ball."""
    n = a.shape[0]
    v = b - a
    t0 = np.zeros(n)
    t1 = np.ones(n)
    ok = np.ones(n, dtype=bool)
    if region.kind == "box":
        hw = np.asarray(region.half_widths)
        with np.errstate(divide="ignore", invalid="ignore"):
            for k in range(region.d):
                flat = v[:, k] == 0.0
                ok &= ~(flat & (np.abs(a[:, k]) > hw[k]))
                ta = (-hw[k] - a[:, k]) / v[:, k]
                tb = (hw[k] - a[:, k]) / v[:, k]
                lo = np.where(flat, -np.inf, np.minimum(ta, tb))
                hi = np.where(flat, np.inf, np.maximum(ta, tb))
                t0 = np.maximum(t0, lo)
                t1 = np.minimum(t1, hi)
    else:
        r = region.radius
        qa = np.einsum("ij,ij->i", v, v)
        hb = np.einsum("ij,ij->i", a, v)
        qc = np.einsum("ij,ij->i", a, a) - r * r
        disc = hb * hb - qa * qc
        point = qa == 0.0
        ok &= np.where(point, qc <= 0, disc >= 0)
        sq = np.sqrt(np.maximum(disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.where(point, 0.0, (-hb - sq) / qa)
            hi = np.where(point, 1.0, (-hb + sq) / qa)
        t0 = np.maximum(t0, lo)
        t1 = np.minimum(t1, hi)
    ok &= t0 <= t1
    p = a + t0[:, None] * v
    q = a + t1[:, None] * v
    return p, q, ok


def max_deviation(forest: NavigationForest, clip: Domain = None) -> np.ndarray:
    """Per-node maximal distance of the trajectory from the start's reference line.

    Directed: distance to the horizontal line through the start.  Radial:
    distance to the line through the origin and the start.  With ``clip``
    (directed only; an already scaled region) the interpolated trajectory is
    first intersected with that region.
    """
    pts = forest.points
    n = len(pts)
    if n == 0:
        return np.zeros(0)
    succ = forest.successor
    if forest.mode == RADIAL:
        if clip is not None:
            raise ValueError("radial trajectories are not clipped")
        pts3 = _pad3(pts)
        norms = np.sqrt(np.einsum("ij,ij->i", pts3, pts3))
        return K.radial_walk_dev(succ, pts3, norms)
    tgt = forest.targets()
    if clip is None:
        p, q, ok = pts, tgt, np.ones(n, dtype=bool)
    else:
        p, q, ok = _clip_all(pts, tgt, clip)
    if pts.shape[1] == 2:
        # the vertical coordinate is linear along a link: path min/max suffice
        seg_min = np.where(ok, np.minimum(p[:, 1], q[:, 1]), np.inf)
        seg_max = np.where(ok, np.maximum(p[:, 1], q[:, 1]), -np.inf)
        order = forest.topological_order()[::-1].astype(np.int64)
        lo = K.path_reduce(order, succ, seg_min, 1)
        hi = K.path_reduce(order, succ, seg_max, 2)
        y = pts[:, 1]
        dev = np.maximum(hi - y, y - lo)
        return np.where(np.isfinite(dev), np.maximum(dev, 0.0), 0.0)
    return K.directed_walk_dev(succ, _pad3(pts), _pad3(p), _pad3(q), ok)


def deviation_by_enumeration(forest: NavigationForest) -> np.ndarray:
    """Reference for :func:`max_deviation` without clipping, walking every trajectory."""
    pts = forest.points
    out = np.zeros(len(pts))
    for i in range(len(pts)):
        x = pts[i]
        if forest.mode == DIRECTED:
            out[i] = max(float(np.linalg.norm(pts[j][1:] - x[1:])) for j in trajectory(i, forest))
        else:
            u = x / np.linalg.norm(x)
            out[i] = max(float(np.linalg.norm(pts[j] - (pts[j] @ u) * u))
                         for j in trajectory(i, forest))
    return out


@dataclass
class EventReport:
    no_dead_ends_in_interior: bool
    cylinder_containment: bool
    dead_ends: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    escapes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    max_dev: float = 0.0

    @property
    def passed(self) -> bool:
        return self.no_dead_ends_in_interior and self.cylinder_containment

    @property
    def violating(self) -> np.ndarray:
        return np.union1d(self.dead_ends, self.escapes)


def interior_mask(points: np.ndarray, domain: Domain, s: float, eps: float) -> np.ndarray:
    """Nodes inside ``(sD)_{eps s}``."""
    if eps <= 0:
        return domain.contains(points, s)
    return erode_domain(domain, eps).contains(points, s)


def check_events(forest: NavigationForest, domain: Domain, s: float, eps: float, h: float,
                 deviations: np.ndarray = None) -> EventReport:
    """Dead-end and cylinder events.

    Directed: no dead end inside ``(sD)_{eps s}`` and every interpolated
    trajectory, clipped to ``(sD)_{eps s}``, stays within ``h`` of the
    horizontal line through its start.  Radial: every trajectory's nodes stay
    within ``h`` of the line through ``o`` and the start (``eps`` unused).
    Precomputed per-node ``deviations`` may be passed in.
    """
    if eps < 0 or h < 0:
        raise ValueError("eps and h must be nonnegative")
    pts = forest.points
    if forest.mode == DIRECTED:
        interior = interior_mask(pts, domain, s, eps) if len(pts) else np.zeros(0, dtype=bool)
        dead = np.flatnonzero(interior & (forest.successor == DEAD_END))
        if deviations is None:
            clip = erode_domain(domain, eps).scaled(s) if eps > 0 else domain.scaled(s)
            deviations = max_deviation(forest, clip)
    else:
        dead = np.zeros(0, dtype=np.int64)
        if deviations is None:
            deviations = max_deviation(forest)
    escapes = np.flatnonzero(deviations > h)
    return EventReport(len(dead) == 0, len(escapes) == 0, dead, escapes,
                       float(deviations.max()) if len(deviations) else 0.0)
