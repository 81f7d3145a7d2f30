"""Navigation schemes and the forests they induce on a point pattern.

Successors are stored as node indices with two sentinels: ``DEAD_END``
(no admissible successor; the node maps to itself) and ``ORIGIN_SINK``
(radial schemes, the next hop is the origin).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .geometry import DIRECTED, RADIAL
from .pointprocess import PointPattern

DEAD_END = K.DEAD_END
ORIGIN_SINK = K.ORIGIN_SINK

DST = "dst"
CONE_DIRECTED = "cone_directed"
RST = "rst"
CONE_RADIAL = "cone_radial"
MIN_HOP = "min_hop"

_HALF_PI = math.pi / 2


@dataclass(frozen=True)
class NavigationScheme:
    kind: str
    half_angle: float = _HALF_PI
    range: float = math.inf

    def __post_init__(self):
        if self.kind not in (DST, CONE_DIRECTED, RST, CONE_RADIAL, MIN_HOP):
            raise ValueError(f"unknown navigation scheme {self.kind!r}")
        if not (0 < self.half_angle <= _HALF_PI):
            raise ValueError("cone half-angle must lie in (0, pi/2]")
        if not self.range > 0:
            raise ValueError("range must be positive")

    @property
    def mode(self) -> str:
        return DIRECTED if self.kind in (DST, CONE_DIRECTED) else RADIAL

    @classmethod
    def dst(cls):
        return cls(DST)

    @classmethod
    def rst(cls):
        return cls(RST)

    @classmethod
    def cone_directed(cls, theta):
        return cls(CONE_DIRECTED, half_angle=theta)

    @classmethod
    def cone_radial(cls, theta):
        return cls(CONE_RADIAL, half_angle=theta)

    @classmethod
    def min_hop(cls, rho):
        return cls(MIN_HOP, range=rho)


@dataclass(frozen=True)
class NavigationForest:
    successor: np.ndarray
    mode: str
    points: np.ndarray
    scheme: NavigationScheme = None

    def __len__(self):
        return self.successor.shape[0]

    @property
    def allows_equal_norm(self) -> bool:
        return self.scheme is not None and self.scheme.kind == MIN_HOP

    def target(self, i: int) -> np.ndarray:
        """Endpoint of the link leaving node ``i`` (the node itself for a dead end)."""
        j = int(self.successor[i])
        if j >= 0:
            return self.points[j]
        if j == ORIGIN_SINK:
            return np.zeros(self.points.shape[1])
        return self.points[i]

    def targets(self) -> np.ndarray:
        succ = self.successor
        out = self.points[np.where(succ >= 0, succ, 0)].copy() if len(succ) else self.points.copy()
        out[succ == ORIGIN_SINK] = 0.0
        dead = succ == DEAD_END
        out[dead] = self.points[dead]
        return out

    def topological_order(self) -> np.ndarray:
        """Node order in which every node precedes its successor."""
        if self.mode == DIRECTED:
            key = self.points[:, 0]
        else:
            key = -np.einsum("ij,ij->i", self.points, self.points)
        return np.argsort(key, kind="stable")


# ---------------------------------------------------------------------------
# Spatial index
# ---------------------------------------------------------------------------


def _pad3(points: np.ndarray) -> np.ndarray:
    pts = np.zeros((points.shape[0], 3))
    pts[:, : points.shape[1]] = points
    return pts


class GridIndex:
    """Uniform grid over a bounding box; points stored cell by cell."""

    def __init__(self, points: np.ndarray, half_widths, cell: float = None):
        pts = _pad3(np.asarray(points, dtype=float))
        n = pts.shape[0]
        d = np.asarray(points).shape[1]
        hw = np.zeros(3)
        hw[:d] = np.asarray(half_widths, dtype=float)
        if n:
            hw[:d] = np.maximum(hw[:d], np.abs(pts[:, :d]).max(axis=0))
        extent = 2.0 * hw[:d]
        if cell is None:
            # about twice the mean nearest-neighbour spacing
            vol = float(np.prod(extent))
            cell = 2.0 * (vol / max(n, 1)) ** (1.0 / d)
        cell = float(max(cell, 1e-9 * max(extent.max(), 1.0)))
        ncell = np.ones(3, dtype=np.int64)
        ncell[:d] = np.maximum(1, np.ceil(extent / cell).astype(np.int64))
        # cap the cell count so huge search ranges do not blow up memory
        while np.prod(ncell) > 4 * max(n, 1) + 64:
            cell *= 1.5
            ncell[:d] = np.maximum(1, np.ceil(extent / cell).astype(np.int64))
        lo = np.zeros(3)
        lo[:d] = -hw[:d]
        coords = np.clip(np.floor((pts - lo) / cell).astype(np.int64), 0, ncell - 1)
        cid = (coords[:, 0] * ncell[1] + coords[:, 1]) * ncell[2] + coords[:, 2]
        order = np.argsort(cid, kind="stable")
        counts = np.bincount(cid, minlength=int(np.prod(ncell)))
        self.cell_start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.sidx = order.astype(np.int64)
        self.spts = np.ascontiguousarray(pts[order])
        self.pts = pts
        self.lo = lo
        self.cell = cell
        self.ncell = ncell
        self.slack = 1e-9 * (cell + float(extent.max()))


def _cone_params(scheme: NavigationScheme):
    kind = K.KIND_DIRECTED if scheme.mode == DIRECTED else K.KIND_RADIAL
    if scheme.kind == DST or scheme.kind == RST:
        return kind, False, 0.0
    theta = scheme.half_angle
    if kind == K.KIND_DIRECTED and theta >= _HALF_PI:
        # the full half-space cone is exactly the DST rule
        return kind, False, 0.0
    cos_t = 0.0 if theta >= _HALF_PI else math.cos(theta)
    return kind, True, cos_t


def _points_of(pattern) -> np.ndarray:
    return pattern.points if isinstance(pattern, PointPattern) else np.asarray(pattern, dtype=float)


def _half_widths(pattern, pts):
    if isinstance(pattern, PointPattern):
        return pattern.domain.bounding_half_widths(pattern.s)
    return np.abs(pts).max(axis=0) if len(pts) else np.ones(pts.shape[1])


def build_forest(pattern, scheme: NavigationScheme, index: GridIndex = None) -> NavigationForest:
    """Apply the scheme's successor rule to every node using the grid index."""
    pts = _points_of(pattern)
    n = pts.shape[0]
    if n and scheme.mode == RADIAL and np.any(np.all(pts == 0.0, axis=1)):
        raise ValueError("radial navigation needs every node away from the origin")
    if n == 0:
        return NavigationForest(np.zeros(0, dtype=np.int64), scheme.mode, pts, scheme)
    if index is None:
        cell = None
        if scheme.kind == MIN_HOP and math.isfinite(scheme.range):
            cell = scheme.range
        index = GridIndex(pts, _half_widths(pattern, pts), cell)
    if scheme.kind == MIN_HOP:
        norm2 = np.einsum("ij,ij->i", index.pts, index.pts)
        order = np.argsort(norm2, kind="stable").astype(np.int64)
        rho = min(scheme.range, 1e300)
        succ, _ = K.min_hop(index.pts, order, index.spts, index.sidx, index.cell_start,
                            index.lo, index.cell, index.ncell, rho, index.slack)
    else:
        kind, use_cone, cos_t = _cone_params(scheme)
        succ = K.nn_all(index.pts, index.spts, index.sidx, index.cell_start, index.lo,
                        index.cell, index.ncell, kind, use_cone, cos_t, index.slack)
    succ.setflags(write=False)
    return NavigationForest(succ, scheme.mode, pts, scheme)


def build_forest_bruteforce(pattern, scheme: NavigationScheme) -> NavigationForest:
    """Same forest by a full scan per node (reference for the indexed build)."""
    pts = _points_of(pattern)
    if scheme.kind == MIN_HOP:
        succ, _ = min_hop_bruteforce(pts, scheme.range)
    else:
        kind, use_cone, cos_t = _cone_params(scheme)
        succ = K.nn_brute(_pad3(pts), kind, use_cone, cos_t)
    return NavigationForest(np.asarray(succ, dtype=np.int64), scheme.mode, pts, scheme)


# ---------------------------------------------------------------------------
# Per-node rules (scalar reference implementations)
# ---------------------------------------------------------------------------


def _lex_key(p):
    return tuple(float(v) for v in p)


def _argmin_lex(cands, pts, x, origin_ok=False):
    best = None
    best_key = None
    for j in cands:
        y = pts[j]
        e = y - x
        key = (float(e @ e), _lex_key(y))
        if best_key is None or key < best_key:
            best, best_key = j, key
    if origin_ok:
        key = (float(x @ x), _lex_key(np.zeros_like(x)))
        if best_key is None or key < best_key:
            best = ORIGIN_SINK
    return DEAD_END if best is None else best


def dst_successor(i: int, pattern) -> int:
    """Nearest point strictly to the right of node ``i``; DEAD_END for the right-most point."""
    pts = _points_of(pattern)
    x = pts[i]
    cands = np.flatnonzero(pts[:, 0] > x[0])
    return int(_argmin_lex(cands, pts, x))


def _angle_ok(e: np.ndarray, u: np.ndarray, theta: float) -> bool:
    if theta >= _HALF_PI:
        return float(e @ u) >= 0.0
    return float(e @ u) >= math.cos(theta) * math.sqrt(float(e @ e))


def cone_directed_successor(i: int, pattern, theta: float) -> int:
    """Nearest point to the right within angle ``theta`` of ``e_1``."""
    pts = _points_of(pattern)
    x = pts[i]
    u = np.zeros_like(x)
    u[0] = 1.0
    cands = [j for j in np.flatnonzero(pts[:, 0] > x[0]) if _angle_ok(pts[j] - x, u, theta)]
    return int(_argmin_lex(cands, pts, x))


def rst_successor(i: int, pattern) -> int:
    """Nearest element of the pattern or ``o`` strictly closer to the origin."""
    pts = _points_of(pattern)
    x = pts[i]
    norms = np.einsum("ij,ij->i", pts, pts)
    cands = np.flatnonzero(norms < norms[i])
    return int(_argmin_lex(cands, pts, x, origin_ok=True))


def cone_radial_successor(i: int, pattern, theta: float) -> int:
    """As :func:`rst_successor`, restricted to a cone of half-angle ``theta`` towards ``o``."""
    pts = _points_of(pattern)
    x = pts[i]
    u = -x / math.sqrt(float(x @ x))
    norms = np.einsum("ij,ij->i", pts, pts)
    cands = [j for j in np.flatnonzero(norms < norms[i]) if _angle_ok(pts[j] - x, u, theta)]
    return int(_argmin_lex(cands, pts, x, origin_ok=True))


def min_hop_bounded_forest(pattern, rho: float) -> NavigationForest:
    return build_forest(pattern, NavigationScheme.min_hop(rho))


def min_hop_bruteforce(points, rho: float):
    """Reference min-hop parents by a quadratic scan in order of increasing norm."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    norm2 = np.einsum("ij,ij->i", pts, pts)
    parent = np.full(n, DEAD_END, dtype=np.int64)
    hops = np.full(n, -1, dtype=np.int64)
    for i in np.argsort(norm2, kind="stable"):
        if norm2[i] <= rho * rho:
            parent[i], hops[i] = ORIGIN_SINK, 1
            continue
        best = None
        for j in range(n):
            if hops[j] < 0 or not norm2[j] < norm2[i]:
                continue
            e = pts[j] - pts[i]
            if float(e @ e) > rho * rho:
                continue
            key = (hops[j], norm2[j], _lex_key(pts[j]))
            if best is None or key < best[0]:
                best = (key, j)
        if best is not None:
            parent[i], hops[i] = best[1], best[0][0] + 1
    return parent, hops


def successor(i: int, pattern, scheme: NavigationScheme) -> int:
    if scheme.kind == DST:
        return dst_successor(i, pattern)
    if scheme.kind == CONE_DIRECTED:
        return cone_directed_successor(i, pattern, scheme.half_angle)
    if scheme.kind == RST:
        return rst_successor(i, pattern)
    if scheme.kind == CONE_RADIAL:
        return cone_radial_successor(i, pattern, scheme.half_angle)
    parent, _ = min_hop_bruteforce(_points_of(pattern), scheme.range)
    return int(parent[i])


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------


def forest_violations(forest: NavigationForest) -> list:
    """Indices violating the navigation axioms for the forest's mode (empty when valid)."""
    succ = forest.successor
    pts = forest.points
    n = len(succ)
    bad = []
    real = succ >= 0
    if np.any(succ >= n) or np.any(succ < ORIGIN_SINK):
        bad.extend(np.flatnonzero((succ >= n) | (succ < ORIGIN_SINK)).tolist())
        return sorted(set(bad))
    if forest.mode == DIRECTED:
        bad.extend(np.flatnonzero(succ == ORIGIN_SINK).tolist())
        idx = np.flatnonzero(real)
        bad.extend(idx[~(pts[succ[idx], 0] > pts[idx, 0])].tolist())
    else:
        norm2 = np.einsum("ij,ij->i", pts, pts)
        idx = np.flatnonzero(real)
        bad.extend(idx[~(norm2[succ[idx]] < norm2[idx])].tolist())
        if not forest.allows_equal_norm:
            bad.extend(np.flatnonzero(succ == DEAD_END).tolist())
    return sorted(set(bad))
