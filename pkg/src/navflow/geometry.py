"""Domains, crossing surfaces and auxiliary regions in two and three dimensions.

All locations handed to the public functions are plain coordinate sequences
(or arrays of shape ``(d,)``).  Surfaces and regions store the *unscaled*
observation point ``x`` together with the scale ``s``; their geometry lives
in the scaled window ``sD``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

GEOM_TOL = 1e-12

DIRECTED = "directed"
RADIAL = "radial"


class GeometryError(ValueError):
    """Invalid geometric configuration."""


class InvalidSurfaceError(GeometryError):
    pass


class EmptyDomainError(GeometryError):
    pass


class OutOfDomainError(GeometryError):
    pass


def as_point(p, d: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.shape[0] not in (2, 3):
        raise GeometryError(f"expected a point in 2 or 3 dimensions, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise GeometryError(f"expected dimension {d}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("point has non-finite coordinates")
    return arr


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """A centered box or ball; open, bounded, convex and containing ``o``."""

    kind: str
    half_widths: tuple = ()
    radius: float = 0.0
    d: int = 2

    def __post_init__(self):
        if self.d not in (2, 3):
            raise GeometryError("only d in {2, 3} is supported")
        if self.kind == "box":
            if len(self.half_widths) != self.d or min(self.half_widths) <= 0:
                raise GeometryError("box needs d positive half-widths")
        elif self.kind == "ball":
            if not self.radius > 0:
                raise GeometryError("ball radius must be positive")
        else:
            raise GeometryError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def box(cls, half_widths: Sequence[float]) -> "Domain":
        hw = tuple(float(w) for w in half_widths)
        return cls("box", half_widths=hw, d=len(hw))

    @classmethod
    def ball(cls, radius: float, d: int = 2) -> "Domain":
        return cls("ball", radius=float(radius), d=d)

    @classmethod
    def unit_cube(cls, d: int = 2) -> "Domain":
        return cls.box([0.5] * d)

    @property
    def inradius(self) -> float:
        return min(self.half_widths) if self.kind == "box" else self.radius

    @property
    def circumradius(self) -> float:
        if self.kind == "box":
            return math.sqrt(sum(w * w for w in self.half_widths))
        return self.radius

    def bounding_half_widths(self, s: float = 1.0) -> np.ndarray:
        if self.kind == "box":
            return s * np.asarray(self.half_widths)
        return np.full(self.d, s * self.radius)

    def volume(self, s: float = 1.0) -> float:
        if self.kind == "box":
            return float(np.prod(2.0 * s * np.asarray(self.half_widths)))
        r = s * self.radius
        return math.pi * r * r if self.d == 2 else 4.0 / 3.0 * math.pi * r ** 3

    def scaled(self, s: float) -> "Domain":
        if self.kind == "box":
            return Domain.box([s * w for w in self.half_widths])
        return Domain.ball(s * self.radius, self.d)

    def contains(self, points, s: float = 1.0, tol: float = GEOM_TOL) -> np.ndarray:
        """Closed membership test in ``sD`` (vectorized over leading axes)."""
        p = np.asarray(points, dtype=float)
        slack = tol * max(s, 1.0)
        if self.kind == "box":
            hw = s * np.asarray(self.half_widths)
            return np.all(np.abs(p) <= hw + slack, axis=-1)
        r = s * self.radius
        return np.sqrt(np.sum(p * p, axis=-1)) <= r + slack


def erode_domain(domain: Domain, eps: float) -> Domain:
    """Return ``D_eps``, the points at distance at least ``eps`` from the boundary."""
    if eps < 0:
        raise GeometryError("eps must be nonnegative")
    if eps >= domain.inradius:
        raise EmptyDomainError(f"eps={eps} leaves nothing of a domain with inradius {domain.inradius}")
    if domain.kind == "box":
        return Domain.box([w - eps for w in domain.half_widths])
    return Domain.ball(domain.radius - eps, domain.d)


def ray_exit_parameter(x, direction, domain: Domain) -> float:
    """Distance ``t*`` along the unit ``direction`` from ``x`` to the boundary of ``domain``."""
    x = as_point(x, domain.d)
    u = as_point(direction, domain.d)
    u = u / np.linalg.norm(u)
    if not domain.contains(x):
        raise OutOfDomainError(f"{x.tolist()} is not in the domain")
    if domain.kind == "box":
        t = math.inf
        for xk, uk, wk in zip(x, u, domain.half_widths):
            if uk > 0:
                t = min(t, (wk - xk) / uk)
            elif uk < 0:
                t = min(t, (-wk - xk) / uk)
        return max(t, 0.0)
    # |x + t u| = r, take the positive root
    b = float(x @ u)
    c = float(x @ x) - domain.radius ** 2
    disc = b * b - c
    return max(-b + math.sqrt(max(disc, 0.0)), 0.0)


def clip_segment(a, b, domain: Domain, s: float = 1.0):
    """Parameter interval ``(t0, t1)`` of ``a + t (b - a)`` inside the closed ``sD``, or None."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    v = b - a
    t0, t1 = 0.0, 1.0
    if domain.kind == "box":
        hw = s * np.asarray(domain.half_widths)
        for k in range(domain.d):
            if v[k] == 0.0:
                if abs(a[k]) > hw[k]:
                    return None
                continue
            ta = (-hw[k] - a[k]) / v[k]
            tb = (hw[k] - a[k]) / v[k]
            lo, hi = (ta, tb) if ta <= tb else (tb, ta)
            t0 = max(t0, lo)
            t1 = min(t1, hi)
            if t0 > t1:
                return None
        return t0, t1
    r = s * domain.radius
    qa = float(v @ v)
    qb = 2.0 * float(a @ v)
    qc = float(a @ a) - r * r
    if qa == 0.0:
        return (0.0, 1.0) if qc <= 0 else None
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    lo = (-qb - sq) / (2 * qa)
    hi = (-qb + sq) / (2 * qa)
    t0, t1 = max(0.0, lo), min(1.0, hi)
    if t0 > t1:
        return None
    return t0, t1


# ---------------------------------------------------------------------------
# Crossing surfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrossingSurface:
    """Flat disc (directed) or spherical cap (radial) of window radius ``g`` around ``s x``.

    ``g = math.inf`` is accepted as a sentinel for the whole hyperplane or
    the whole sphere of radius ``s |x|``.
    """

    mode: str
    x: tuple
    s: float
    g: float

    def __post_init__(self):
        if self.mode not in (DIRECTED, RADIAL):
            raise InvalidSurfaceError(f"unknown mode {self.mode!r}")
        x = as_point(self.x)
        object.__setattr__(self, "x", tuple(float(v) for v in x))
        if not self.s > 0:
            raise InvalidSurfaceError("scale must be positive")
        if not self.g > 0:
            raise InvalidSurfaceError("window radius must be positive")
        if self.mode == RADIAL:
            if np.linalg.norm(x) == 0.0:
                raise InvalidSurfaceError("radial surfaces need x != o")
            if math.isfinite(self.g) and self.g >= self.radius:
                raise InvalidSurfaceError("cap must be smaller than a hemisphere (g < s|x|)")

    @property
    def d(self) -> int:
        return len(self.x)

    @property
    def center(self) -> np.ndarray:
        return self.s * np.asarray(self.x)

    @property
    def radius(self) -> float:
        """Sphere radius ``s |x|`` (radial surfaces)."""
        return self.s * float(np.linalg.norm(self.x))


def surface_measure(surface: CrossingSurface) -> float:
    """(d-1)-dimensional Hausdorff measure of the surface."""
    g = surface.g
    d = surface.d
    if surface.mode == DIRECTED:
        if not math.isfinite(g):
            raise InvalidSurfaceError("unbounded directed surface has infinite measure")
        return 2.0 * g if d == 2 else math.pi * g * g
    R = surface.radius
    if not g < 2.0 * R:
        raise InvalidSurfaceError(f"window radius {g} covers the whole sphere of radius {R}")
    half = 2.0 * math.asin(g / (2.0 * R))
    if d == 2:
        return 2.0 * R * half
    # 2 pi R^2 (1 - cos(half)), written without cancellation
    return 2.0 * math.pi * R * R * 2.0 * math.sin(half / 2.0) ** 2


def _within_window(p: np.ndarray, surface: CrossingSurface) -> bool:
    if not math.isfinite(surface.g):
        return True
    diff = p - surface.center
    return float(diff @ diff) <= surface.g * surface.g * (1.0 + GEOM_TOL)


def sphere_roots(a, b, R: float) -> list:
    """Roots ``t`` in ``[0, 1)`` of ``|a + t (b - a)| = R``, ascending."""
    a = np.asarray(a, dtype=float)
    v = np.asarray(b, dtype=float) - a
    qa = float(v @ v)
    if qa == 0.0:
        return []
    half_b = float(a @ v)
    qc = float(a @ a) - R * R
    disc = half_b * half_b - qa * qc
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    # numerically stable pair
    if half_b >= 0:
        q = -(half_b + sq)
    else:
        q = -(half_b - sq)
    roots = set()
    if q != 0.0:
        roots.add(qc / q)
    roots.add(q / qa)
    return sorted(t for t in roots if 0.0 <= t < 1.0)


def segment_crossing(a, b, surface: CrossingSurface) -> Optional[np.ndarray]:
    """Intersection point of the link ``[a, b]`` with the surface, or None.

    Directed surfaces use the half-open convention
    ``pi_1(a) <= pi_1(s x) < pi_1(b)``.  For radial caps the first root along
    the segment whose point lies inside the window is returned.
    """
    a = as_point(a, surface.d)
    b = as_point(b, surface.d)
    if surface.mode == DIRECTED:
        c = surface.center[0]
        if not (a[0] <= c < b[0]):
            return None
        t = (c - a[0]) / (b[0] - a[0])
        p = a + t * (b - a)
        p[0] = c
        return p if _within_window(p, surface) else None
    for t in sphere_roots(a, b, surface.radius):
        p = a + t * (b - a)
        if _within_window(p, surface):
            return p
    return None


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirectedCylinder:
    """Horizontal cylinder of radius ``radius`` through ``anchor``."""

    anchor: tuple
    radius: float


@dataclass(frozen=True)
class RadialCylinder:
    """Points whose component orthogonal to ``direction`` has length at most ``radius``."""

    direction: tuple
    radius: float


@dataclass(frozen=True)
class LeftCylinderPlus:
    """Points of ``sD`` left of ``s x`` within ``g + h`` of the horizontal line through it."""

    x: tuple
    s: float
    g: float
    h: float
    domain: Domain


@dataclass(frozen=True)
class LeftCylinderMinus:
    """Narrowed left cylinder of radius ``g - h``, cut on the left at the ``eps``-interior."""

    x: tuple
    s: float
    g: float
    h: float
    eps: float
    domain: Domain

    def __post_init__(self):
        if not self.g > self.h:
            raise GeometryError("LeftCylinderMinus needs g > h")

    def left_cut(self) -> float:
        """Smallest first coordinate of ``D_eps`` inside the (unscaled) narrowed cylinder."""
        r = (self.g - self.h) / self.s
        inner = erode_domain(self.domain, self.eps)
        xp = np.asarray(self.x[1:], dtype=float)
        if inner.kind == "box":
            hw = np.asarray(inner.half_widths[1:])
            # cylinder cross-section must meet the eroded box cross-section
            gap = np.maximum(np.abs(xp) - hw, 0.0)
            if float(np.linalg.norm(gap)) > r:
                return math.inf
            return -inner.half_widths[0]
        m = max(float(np.linalg.norm(xp)) - r, 0.0)
        if m > inner.radius:
            return math.inf
        return -math.sqrt(inner.radius ** 2 - m * m)


@dataclass(frozen=True)
class ConePlus:
    """Widened cone (window ``g + 2h``) outside ``B_{s|x|}(o)`` around the ray through ``x``."""

    x: tuple
    s: float
    g: float
    h: float
    domain: Domain


@dataclass(frozen=True)
class ConeMinus:
    """Narrowed cone (window ``g - 2h``); needs ``g >= 2h``."""

    x: tuple
    s: float
    g: float
    h: float
    domain: Domain

    def __post_init__(self):
        if not self.g >= 2 * self.h:
            raise GeometryError("ConeMinus needs g >= 2h")


Region = Union[DirectedCylinder, RadialCylinder, LeftCylinderPlus, LeftCylinderMinus, ConePlus, ConeMinus]


def _perp_dist(p: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    diff = p[..., 1:] - anchor[1:]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _cone_offset(p: np.ndarray, x: np.ndarray, s: float) -> np.ndarray:
    """``s * | |x| p_hat - x |`` (infinite at ``p = o``)."""
    nx = float(np.linalg.norm(x))
    norms = np.sqrt(np.sum(p * p, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        phat = p / norms[..., None]
    diff = nx * phat - x
    out = s * np.sqrt(np.sum(diff * diff, axis=-1))
    return np.where(norms > 0, out, np.inf)


def region_contains(region: Region, p) -> np.ndarray:
    """Exact membership of ``p`` (one point or an ``(n, d)`` array) in ``region``."""
    p = np.asarray(p, dtype=float)
    tol = GEOM_TOL
    if isinstance(region, DirectedCylinder):
        return _perp_dist(p, np.asarray(region.anchor, dtype=float)) <= region.radius + tol
    if isinstance(region, RadialCylinder):
        v = np.asarray(region.direction, dtype=float)
        v = v / np.linalg.norm(v)
        along = p @ v
        orth = p - along[..., None] * v
        return np.sqrt(np.sum(orth * orth, axis=-1)) <= region.radius + tol
    if isinstance(region, (LeftCylinderPlus, LeftCylinderMinus)):
        x = np.asarray(region.x, dtype=float)
        s = region.s
        sx = s * x
        in_domain = region.domain.contains(p, s)
        if isinstance(region, LeftCylinderPlus):
            width = region.g + region.h
            left = -math.inf
        else:
            width = region.g - region.h
            left = s * region.left_cut()
        slack = tol * max(s, 1.0)
        near = _perp_dist(p, sx) <= width + slack
        first = p[..., 0]
        return in_domain & near & (first <= sx[0] + slack) & (first >= left - slack)
    if isinstance(region, (ConePlus, ConeMinus)):
        x = np.asarray(region.x, dtype=float)
        s = region.s
        width = region.g + 2 * region.h if isinstance(region, ConePlus) else region.g - 2 * region.h
        norms = np.sqrt(np.sum(p * p, axis=-1))
        slack = tol * max(s, 1.0)
        outside = norms >= s * float(np.linalg.norm(x)) - slack
        return region.domain.contains(p, s) & outside & (_cone_offset(p, x, s) <= width + slack)
    raise TypeError(f"unknown region {type(region).__name__}")
