"""Monte Carlo and quadrature sides of the traffic-density limits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .flow import crossing_set, interior_mask
from .geometry import (DIRECTED, ConeMinus, ConePlus, CrossingSurface, Domain,
                       LeftCylinderMinus, LeftCylinderPlus, OutOfDomainError,
                       as_point, ray_exit_parameter, region_contains)
from .navigation import DEAD_END, NavigationForest
from .quadrature import adaptive_simpson

QUAD_TOL = 1e-8


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class ReplicateStats:
    s: float
    replicate: int
    n_crossings: int
    traffic_sum: float
    surface_measure: float
    event_pass: bool
    max_dev: float
    dead_end_frac: float


class Estimate(NamedTuple):
    value: float
    se: float


@dataclass(frozen=True)
class TheoremEstimate:
    s_values: tuple
    lhs: tuple
    lhs_se: tuple
    lambda_hat: tuple
    lambda_hat_se: tuple
    rhs: float

    @property
    def product(self):
        """``lhs * lambda_hat`` per scale; converges to ``rhs``."""
        return tuple(a * b for a, b in zip(self.lhs, self.lambda_hat))

    @property
    def relative_error(self):
        return tuple(abs(p - self.rhs) / self.rhs for p in self.product)


def _columns(stats: Sequence[ReplicateStats]):
    if len(stats) < 2:
        raise InsufficientData("at least two replicates are needed")
    k = np.array([r.n_crossings for r in stats], dtype=float)
    t = np.array([r.traffic_sum for r in stats], dtype=float)
    return k, t


def lhs_ratio(stats: Sequence[ReplicateStats]) -> Estimate:
    """``s^-1 mean(traffic_sum) / mean(n_crossings)`` with a delta-method standard error."""
    k, t = _columns(stats)
    s = stats[0].s
    if any(r.s != s for r in stats):
        raise ValueError("replicates from different scales")
    kbar = k.mean()
    if kbar <= 0:
        raise InsufficientData("no crossings observed")
    tbar = t.mean()
    ratio = tbar / kbar
    cov = np.cov(np.vstack([t, k]), ddof=1)
    var = (cov[0, 0] - 2 * ratio * cov[0, 1] + ratio * ratio * cov[1, 1]) / (len(k) * kbar * kbar)
    return Estimate(ratio / s, math.sqrt(max(var, 0.0)) / s)


def link_density_hat(stats: Sequence[ReplicateStats], surface_measure: float = None) -> Estimate:
    """Mean crossing count per unit surface measure."""
    k, _ = _columns(stats)
    if surface_measure is None:
        surface_measure = stats[0].surface_measure
    if not surface_measure > 0:
        raise ValueError("surface measure must be positive")
    return Estimate(k.mean() / surface_measure, k.std(ddof=1) / math.sqrt(len(k)) / surface_measure)


def density_product(stats: Sequence[ReplicateStats]) -> Estimate:
    """``lhs * lambda_hat = mean(traffic_sum) / (s * surface_measure)`` with its standard error."""
    _, t = _columns(stats)
    norm = stats[0].s * stats[0].surface_measure
    return Estimate(t.mean() / norm, t.std(ddof=1) / math.sqrt(len(t)) / norm)


def _field_product(lam, mu):
    def f(p):
        return float(lam(p)) * float(mu(p))
    return f


def rhs_directed(x, lam, mu, domain: Domain, tol: float = QUAD_TOL) -> float:
    """Line integral of ``lam * mu`` from ``x`` leftwards to the boundary of the domain."""
    x = as_point(x, domain.d)
    if not domain.contains(x):
        raise OutOfDomainError(f"{x.tolist()} is not in the domain")
    back = np.zeros(domain.d)
    back[0] = -1.0
    t_exit = ray_exit_parameter(x, back, domain)
    f = _field_product(lam, mu)
    return adaptive_simpson(lambda r: f(x + r * back), 0.0, t_exit, tol)


def rhs_radial(x, lam, mu, domain: Domain, tol: float = QUAD_TOL) -> float:
    """``|x|^{1-d}`` times the radial integral of ``lam * mu * r^{d-1}`` outwards from ``|x|``."""
    x = as_point(x, domain.d)
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise ValueError("the radial limit is singular at the origin")
    if not domain.contains(x):
        raise OutOfDomainError(f"{x.tolist()} is not in the domain")
    u = x / nx
    d = domain.d
    t_exit = ray_exit_parameter(x, u, domain)
    f = _field_product(lam, mu)
    integral = adaptive_simpson(lambda r: f(r * u) * r ** (d - 1), nx, nx + t_exit, tol)
    return integral * nx ** (1 - d)


class ExponentFit(NamedTuple):
    exponent: float
    intercept: float
    r2: float


def fit_fluctuation_exponent(s_values, deviations) -> ExponentFit:
    """Least-squares slope of ``log(deviation)`` against ``log(s)``."""
    s = np.asarray(s_values, dtype=float)
    dev = np.asarray(deviations, dtype=float)
    if len(np.unique(s)) < 3:
        raise InsufficientData("need at least three distinct scales")
    if np.any(dev <= 0) or np.any(s <= 0):
        raise ValueError("log of a nonpositive value")
    ls, ld = np.log(s), np.log(dev)
    slope, intercept = np.polyfit(ls, ld, 1)
    resid = ld - (slope * ls + intercept)
    ss_tot = float(np.sum((ld - ld.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(slope), float(intercept), r2)


def dead_end_fraction(forest: NavigationForest, domain: Domain, s: float, eps: float = 0.0) -> float:
    """Fraction of the nodes in ``(sD)_{eps s}`` that are dead ends."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if len(forest) == 0:
        return 0.0
    inside = interior_mask(forest.points, domain, s, eps)
    if not inside.any():
        return 0.0
    return float(np.mean(forest.successor[inside] == DEAD_END))


class SandwichReport(NamedTuple):
    lower: float
    middle: float
    upper: float
    holds: bool


def sandwich_regions(mode: str, domain: Domain, x, s: float, g: float, h: float, eps: float):
    """Inner and outer comparison regions; the inner one is None when it is empty."""
    x = tuple(float(v) for v in x)
    if mode == DIRECTED:
        outer = LeftCylinderPlus(x, s, g, h, domain)
        inner = LeftCylinderMinus(x, s, g, h, eps, domain) if g > h else None
    else:
        outer = ConePlus(x, s, g, h, domain)
        inner = ConeMinus(x, s, g, h, domain) if g >= 2 * h else None
    return inner, outer


def sandwich_report(forest: NavigationForest, delta, rates, domain: Domain, x, s: float,
                    g: float, h: float, eps: float) -> SandwichReport:
    """Traffic through the window against the rate mass of the inner and outer regions.

    Meaningful only on replicates where the sub-ballisticity event holds.
    """
    pts = forest.points
    rates = np.asarray(rates, dtype=float)
    if len(pts) == 0:
        return SandwichReport(0.0, 0.0, 0.0, True)
    surface = CrossingSurface(forest.mode, tuple(x), s, g)
    members = crossing_set(forest, surface).members
    middle = float(np.sum(np.asarray(delta)[members]))
    inner, outer = sandwich_regions(forest.mode, domain, x, s, g, h, eps)
    upper = float(np.sum(rates[region_contains(outer, pts)]))
    lower = float(np.sum(rates[region_contains(inner, pts)])) if inner is not None else 0.0
    # sums over different index sets: allow for summation-order rounding
    slack = 1e-9 * max(upper, 1.0)
    return SandwichReport(lower, middle, upper, lower <= middle + slack and middle <= upper + slack)
