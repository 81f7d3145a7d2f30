"""Intensity fields and Poisson sampling through the marked thinning coupling.

A homogeneous Poisson process of intensity ``lambda_max`` on ``sD`` is
sampled once, every point carrying an independent uniform mark in
``(0, lambda_max]``.  Thinning against any field bounded by ``lambda_max``
keeps the points whose mark does not exceed the rescaled field value, so
patterns obtained from the same marked sample are nested whenever the fields
are ordered.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .geometry import Domain, OutOfDomainError


class ConfigError(ValueError):
    pass


class CouplingViolation(ValueError):
    """A field exceeds the dominating intensity used for the marked sample."""


def replicate_rng(master_seed: int, replicate: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, replicate, *stream)``.

    Streams are derived by hashing the key with ``SeedSequence``, so the
    generator depends only on the key and never on scheduling.
    """
    seq = np.random.SeedSequence(entropy=int(master_seed) & (2 ** 64 - 1),
                                 spawn_key=(int(replicate), *map(int, stream)))
    return np.random.Generator(np.random.PCG64(seq))


# ---------------------------------------------------------------------------
# Intensity fields
# ---------------------------------------------------------------------------


class IntensityField:
    """Nonnegative bounded function on an (unscaled) domain."""

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    def max_over(self, domain: Domain) -> float:
        raise NotImplementedError

    @property
    def lipschitz(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(IntensityField):
    value: float

    def __post_init__(self):
        if self.value < 0 or not math.isfinite(self.value):
            raise ConfigError("constant field must be finite and nonnegative")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], float(self.value))

    def max_over(self, domain):
        return float(self.value)

    @property
    def lipschitz(self):
        return 0.0


@dataclass(frozen=True)
class Affine(IntensityField):
    """``max(0, offset + <gradient, x>)``."""

    offset: float
    gradient: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, self.offset + x @ np.asarray(self.gradient, dtype=float))

    def max_over(self, domain):
        grad = np.asarray(self.gradient, dtype=float)
        if domain.kind == "box":
            top = self.offset + float(np.abs(grad) @ np.asarray(domain.half_widths))
        else:
            top = self.offset + float(np.linalg.norm(grad)) * domain.radius
        return max(0.0, top)

    @property
    def lipschitz(self):
        return float(np.linalg.norm(self.gradient))


@dataclass(frozen=True)
class Radial(IntensityField):
    """Piecewise-linear profile in ``|x|`` given by a table of ``(radius, value)`` knots."""

    radii: tuple
    values: tuple

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.shape != v.shape or r.size < 1:
            raise ConfigError("radial table needs matching, nonempty radii and values")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ConfigError("radial knots must be nonnegative and strictly increasing")
        if np.any(v < 0):
            raise ConfigError("radial profile must be nonnegative")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(np.linalg.norm(x, axis=-1), self.radii, self.values)

    def max_over(self, domain):
        return float(max(self.values))

    @property
    def lipschitz(self):
        if len(self.radii) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.radii))))


class Grid(IntensityField):
    """Multilinear interpolation of samples on a regular lattice over the domain's bounding box."""

    def __init__(self, samples, domain: Domain):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != domain.d or min(samples.shape) < 2:
            raise ConfigError("grid needs at least two samples per axis")
        if np.any(samples < 0) or not np.all(np.isfinite(samples)):
            raise ConfigError("grid samples must be finite and nonnegative")
        self.samples = samples
        self.domain = domain
        hw = domain.bounding_half_widths()
        self.axes = tuple(np.linspace(-w, w, n) for w, n in zip(hw, samples.shape))
        self._interp = RegularGridInterpolator(self.axes, samples, method="linear",
                                               bounds_error=False, fill_value=None)

    @classmethod
    def from_function(cls, f, domain: Domain, shape: Sequence[int]) -> "Grid":
        hw = domain.bounding_half_widths()
        axes = [np.linspace(-w, w, n) for w, n in zip(hw, shape)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(f(mesh), domain)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self._interp(x.reshape(-1, x.shape[-1]))
        return np.maximum(out, 0.0).reshape(x.shape[:-1])

    def max_over(self, domain):
        return float(self.samples.max())

    @property
    def lipschitz(self):
        slopes = [np.max(np.abs(np.diff(self.samples, axis=k))) / (ax[1] - ax[0])
                  for k, ax in enumerate(self.axes)]
        return float(np.sqrt(np.sum(np.square(slopes))))


def load_grid_csv(path, domain: Domain) -> Grid:
    """Read a raster: first row ``nx, ny[, nz]``, then the samples in row-major order."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ConfigError(f"{path}: empty grid file")
    try:
        shape = tuple(int(c) for c in rows[0] if c.strip())
        values = [float(c) for r in rows[1:] for c in r if c.strip()]
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if len(shape) != domain.d:
        raise ConfigError(f"{path}: header has {len(shape)} sizes, domain is {domain.d}-dimensional")
    if len(values) != int(np.prod(shape)):
        raise ConfigError(f"{path}: expected {int(np.prod(shape))} samples, found {len(values)}")
    return Grid(np.asarray(values).reshape(shape), domain)


def eval_scaled(field: IntensityField, y, s: float, domain: Domain) -> np.ndarray:
    """``field(y / s)`` for points ``y`` of ``sD``."""
    y = np.asarray(y, dtype=float)
    if not np.all(domain.contains(y, s)):
        raise OutOfDomainError("point outside the scaled domain")
    return field(y / s)


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarkedPattern:
    points: np.ndarray
    marks: np.ndarray
    domain: Domain
    s: float
    lambda_max: float


@dataclass(frozen=True)
class PointPattern:
    points: np.ndarray
    domain: Domain
    s: float = 1.0
    kept: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.domain.d


def has_duplicates(pts: np.ndarray) -> bool:
    if len(pts) < 2:
        return False
    first = np.sort(pts[:, 0])
    if not np.any(first[1:] == first[:-1]):
        return False
    return len(np.unique(pts, axis=0)) != len(pts)


def make_pattern(points, domain: Domain, s: float = 1.0) -> PointPattern:
    """Wrap explicit coordinates, validating the pattern invariants."""
    pts = np.asarray(points, dtype=float).reshape(-1, domain.d)
    if not np.all(np.isfinite(pts)):
        raise ValueError("pattern has non-finite coordinates")
    if not np.all(domain.contains(pts, s)):
        raise OutOfDomainError("pattern point outside sD")
    if has_duplicates(pts):
        raise ValueError("pattern contains duplicate points")
    pts.setflags(write=False)
    return PointPattern(pts, domain, float(s))


def _uniform_in(domain: Domain, s: float, count: int, rng: np.random.Generator) -> np.ndarray:
    hw = domain.bounding_half_widths(s)
    if domain.kind == "box":
        return rng.uniform(-hw, hw, size=(count, domain.d))
    r = s * domain.radius
    out = np.empty((0, domain.d))
    while out.shape[0] < count:
        need = count - out.shape[0]
        batch = rng.uniform(-hw, hw, size=(int(need * 2.2) + 16, domain.d))
        batch = batch[np.sum(batch * batch, axis=1) < r * r]
        out = np.concatenate([out, batch[:need]])
    return out


def _spread_bits(v: np.ndarray, d: int) -> np.ndarray:
    """Interleave the low bits of ``v`` with ``d - 1`` zero bits between them."""
    out = np.zeros_like(v)
    nbits = 64 // d
    for b in range(nbits):
        out |= ((v >> np.uint64(b)) & np.uint64(1)) << np.uint64(b * d)
    return out


def locality_order(points: np.ndarray, cell: float) -> np.ndarray:
    """Permutation sorting points along a Z-order curve of ``cell``-sized boxes.

    Neighbouring points get nearby indices, which keeps trajectory walks
    cache friendly.
    """
    n, d = points.shape
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    q = np.floor((points - points.min(axis=0)) / cell).astype(np.uint64)
    key = np.zeros(n, dtype=np.uint64)
    for k in range(d):
        key |= _spread_bits(q[:, k], d) << np.uint64(k)
    return np.argsort(key, kind="stable")


def sample_marked(domain: Domain, s: float, lambda_max: float, rng: np.random.Generator) -> MarkedPattern:
    """Homogeneous Poisson process of intensity ``lambda_max`` on ``sD`` with uniform marks."""
    if not lambda_max > 0 or not math.isfinite(lambda_max):
        raise ConfigError("lambda_max must be positive and finite")
    if s < 1:
        raise ConfigError("scale s must be at least 1")
    count = int(rng.poisson(lambda_max * domain.volume(s)))
    pts = _uniform_in(domain, s, count, rng)
    if count:
        spacing = (domain.volume(s) / count) ** (1.0 / domain.d)
        pts = pts[locality_order(pts, 4.0 * spacing)]
    # marks in (0, lambda_max] so that a zero field keeps nothing
    marks = lambda_max * (1.0 - rng.random(count))
    if has_duplicates(pts):
        raise RuntimeError("duplicate points in a Poisson sample")
    pts.setflags(write=False)
    marks.setflags(write=False)
    return MarkedPattern(pts, marks, domain, float(s), float(lambda_max))


def thin(marked: MarkedPattern, field: IntensityField) -> PointPattern:
    """Keep the points whose mark does not exceed ``field(point / s)``."""
    pts = marked.points
    vals = field(pts / marked.s) if len(pts) else np.zeros(0)
    if np.any(vals > marked.lambda_max * (1 + 1e-12)):
        raise CouplingViolation("intensity field exceeds lambda_max on a sampled point")
    keep = marked.marks <= vals
    kept = pts[keep]
    kept.setflags(write=False)
    return PointPattern(kept, marked.domain, marked.s, kept=np.flatnonzero(keep))


def sample_pattern(domain: Domain, s: float, field: IntensityField, rng: np.random.Generator,
                   lambda_max: float = None) -> PointPattern:
    if lambda_max is None:
        lambda_max = field.max_over(domain)
    if lambda_max <= 0:
        return PointPattern(np.zeros((0, domain.d)), domain, float(s), kept=np.zeros(0, dtype=int))
    return thin(sample_marked(domain, s, lambda_max, rng), field)
