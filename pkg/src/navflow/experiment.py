"""Replicate pipeline, parallel harness and CSV output for the CLI subcommands."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .estimators import (InsufficientData, ReplicateStats, SandwichReport,
                         dead_end_fraction, density_product, fit_fluctuation_exponent,
                         lhs_ratio, link_density_hat, rhs_directed, rhs_radial,
                         sandwich_report)
from .flow import (accumulate_traffic, check_events, crossing_set, interior_mask,
                   max_deviation)
from .geometry import DIRECTED, CrossingSurface, erode_domain, surface_measure
from .navigation import NavigationForest, NavigationScheme, build_forest
from .pointprocess import PointPattern, eval_scaled, replicate_rng, sample_pattern

REPLICATES_HEADER = ("s", "replicate", "n_crossings", "traffic_sum", "surface_measure",
                     "event_pass", "max_dev", "dead_end_frac")
SUMMARY_HEADER = ("s", "lhs", "lhs_se", "lambda_hat", "lambda_hat_se", "rhs", "rel_err",
                  "event_fail_freq")


@dataclass(frozen=True)
class ReplicateResult:
    stats: ReplicateStats
    sandwich: SandwichReport


@dataclass(frozen=True)
class Realization:
    pattern: PointPattern
    forest: NavigationForest
    rates: np.ndarray
    delta: np.ndarray


def realize(cfg: ExperimentConfig, s_index: int, replicate: int,
            scheme: NavigationScheme = None) -> Realization:
    """Pattern, forest and traffic for one ``(s, replicate)`` cell of the design."""
    s = cfg.s_list[s_index]
    rng = replicate_rng(cfg.master_seed, replicate, s_index)
    pattern = sample_pattern(cfg.domain, s, cfg.lam, rng)
    forest = build_forest(pattern, scheme or cfg.scheme)
    rates = eval_scaled(cfg.mu, pattern.points, s, cfg.domain) if len(pattern) else np.zeros(0)
    delta = accumulate_traffic(forest, rates)
    return Realization(pattern, forest, rates, delta)


def node_deviations(cfg: ExperimentConfig, forest: NavigationForest, s: float) -> np.ndarray:
    if forest.mode == DIRECTED:
        clip = erode_domain(cfg.domain, cfg.eps) if cfg.eps > 0 else cfg.domain
        return max_deviation(forest, clip.scaled(s))
    return max_deviation(forest)


def run_replicate(cfg: ExperimentConfig, s_index: int, replicate: int) -> ReplicateResult:
    s = cfg.s_list[s_index]
    g, h = cfg.g(s), cfg.h(s)
    real = realize(cfg, s_index, replicate)
    forest = real.forest
    surface = CrossingSurface(cfg.mode, cfg.x, s, g)
    members = crossing_set(forest, surface).members
    devs = node_deviations(cfg, forest, s)
    event = check_events(forest, cfg.domain, s, cfg.eps, h, devs)
    stats = ReplicateStats(
        s=s, replicate=replicate, n_crossings=len(members),
        traffic_sum=float(np.sum(real.delta[members])),
        surface_measure=surface_measure(surface), event_pass=event.passed,
        max_dev=event.max_dev,
        dead_end_frac=dead_end_fraction(forest, cfg.domain, s, cfg.eps),
    )
    sandwich = sandwich_report(forest, real.delta, real.rates, cfg.domain, cfg.x, s, g, h, cfg.eps)
    return ReplicateResult(stats, sandwich)


def parallel_map(fn: Callable, tasks: Sequence, threads: Optional[int] = None) -> list:
    """``[fn(*t) for t in tasks]`` on a thread pool; output order follows ``tasks``."""
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def run_traffic(cfg: ExperimentConfig, threads: Optional[int] = None) -> list:
    """All ``(s, replicate)`` results, ordered by scale then replicate index."""
    tasks = [(cfg, k, i) for k in range(len(cfg.s_list)) for i in range(cfg.replicates)]
    return parallel_map(run_replicate, tasks, threads)


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------


def rhs_value(cfg: ExperimentConfig) -> float:
    f = rhs_directed if cfg.mode == DIRECTED else rhs_radial
    return f(cfg.x, cfg.lam, cfg.mu, cfg.domain)


@dataclass(frozen=True)
class ScaleSummary:
    s: float
    lhs: float
    lhs_se: float
    lambda_hat: float
    lambda_hat_se: float
    rhs: float
    rel_err: float
    event_fail_freq: float
    product_se: float
    mean_max_dev: float
    max_dev_se: float

    def row(self):
        return (self.s, self.lhs, self.lhs_se, self.lambda_hat, self.lambda_hat_se,
                self.rhs, self.rel_err, self.event_fail_freq)


def summarize(stats: Sequence[ReplicateStats], rhs: float) -> ScaleSummary:
    try:
        lhs = lhs_ratio(stats)
    except InsufficientData:
        lhs = (math.nan, math.nan)
    lam = link_density_hat(stats)
    prod = density_product(stats)
    rel = abs(prod.value - rhs) / rhs if rhs > 0 else math.nan
    fails = np.mean([not r.event_pass for r in stats])
    dev = np.array([r.max_dev for r in stats])
    return ScaleSummary(stats[0].s, lhs[0], lhs[1], lam.value, lam.se, rhs, float(rel),
                        float(fails), prod.se, float(dev.mean()),
                        float(dev.std(ddof=1) / math.sqrt(len(dev))))


def by_scale(results: Sequence[ReplicateResult]) -> list:
    groups = {}
    for r in results:
        groups.setdefault(r.stats.s, []).append(r.stats)
    return [groups[s] for s in sorted(groups)]


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def stats_row(r: ReplicateStats):
    return (r.s, r.replicate, r.n_crossings, r.traffic_sum, r.surface_measure, r.event_pass,
            r.max_dev, r.dead_end_frac)


def fit_rows(s_values, mean_devs):
    try:
        fit = fit_fluctuation_exponent(s_values, mean_devs)
    except (InsufficientData, ValueError):
        return None
    return [(fit.exponent, fit.intercept, fit.r2)]


def write_traffic(cfg: ExperimentConfig, results: Sequence[ReplicateResult], out: str) -> list:
    """replicates.csv, summary.csv, sandwich.csv and (three or more scales) fit.csv."""
    os.makedirs(out, exist_ok=True)
    rhs = rhs_value(cfg)
    summaries = [summarize(group, rhs) for group in by_scale(results)]
    write_csv(os.path.join(out, "replicates.csv"), REPLICATES_HEADER,
              (stats_row(r.stats) for r in results))
    write_csv(os.path.join(out, "summary.csv"), SUMMARY_HEADER, (sm.row() for sm in summaries))
    write_csv(os.path.join(out, "sandwich.csv"),
              ("s", "replicate", "event_pass", "lower", "middle", "upper", "holds"),
              ((r.stats.s, r.stats.replicate, r.stats.event_pass, *r.sandwich) for r in results))
    fit = fit_rows([sm.s for sm in summaries], [sm.mean_max_dev for sm in summaries])
    if fit:
        write_csv(os.path.join(out, "fit.csv"), ("exponent", "intercept", "r2"), fit)
    return summaries


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _deviation_task(cfg, s_index, replicate):
    s = cfg.s_list[s_index]
    real = realize(cfg, s_index, replicate)
    devs = node_deviations(cfg, real.forest, s)
    return float(devs.max()) if len(devs) else 0.0


def run_subball(cfg: ExperimentConfig, threads: Optional[int] = None):
    """Mean over replicates of the largest trajectory deviation, per scale."""
    tasks = [(cfg, k, i) for k in range(len(cfg.s_list)) for i in range(cfg.replicates)]
    devs = np.array(parallel_map(_deviation_task, tasks, threads)).reshape(len(cfg.s_list), -1)
    rows = []
    for s, d in zip(cfg.s_list, devs):
        m, se = float(d.mean()), float(d.std(ddof=1) / math.sqrt(d.size))
        rows.append((s, m, se, m / s))
    return rows


def write_subball(rows, out: str):
    os.makedirs(out, exist_ok=True)
    write_csv(os.path.join(out, "subball.csv"), ("s", "mean_max_dev", "max_dev_se", "ratio"), rows)
    fit = fit_rows([r[0] for r in rows], [r[1] for r in rows])
    if fit:
        write_csv(os.path.join(out, "fit.csv"), ("exponent", "intercept", "r2"), fit)
    return fit


def _crossing_counts_task(cfg, s_index, replicate, locations):
    s = cfg.s_list[s_index]
    real = realize(cfg, s_index, replicate)
    g = cfg.g(s)
    return [len(crossing_set(real.forest, CrossingSurface(cfg.mode, loc, s, g)))
            for loc in locations]


def run_linkdensity(cfg: ExperimentConfig, threads: Optional[int] = None):
    """Crossing intensity at each location; all locations share each realization."""
    locations = cfg.locations or (cfg.x,)
    rows = []
    for k, s in enumerate(cfg.s_list):
        tasks = [(cfg, k, i, locations) for i in range(cfg.replicates)]
        counts = np.array(parallel_map(_crossing_counts_task, tasks, threads), dtype=float)
        measures = [surface_measure(CrossingSurface(cfg.mode, loc, s, cfg.g(s))) for loc in locations]
        for j, loc in enumerate(locations):
            c = counts[:, j]
            lam_x = float(cfg.lam(np.asarray(loc)))
            rows.append((j, *loc, s, c.mean() / measures[j],
                         c.std(ddof=1) / math.sqrt(len(c)) / measures[j], lam_x))
    return rows


def linkdensity_header(d: int):
    coords = tuple(f"x{k + 1}" for k in range(d))
    return ("location", *coords, "s", "lambda_hat", "lambda_hat_se", "lambda")


def _dead_end_task(cfg, s_index, replicate, rhos):
    s = cfg.s_list[s_index]
    rng = replicate_rng(cfg.master_seed, replicate, s_index)
    pattern = sample_pattern(cfg.domain, s, cfg.lam, rng)
    inside = interior_mask(pattern.points, cfg.domain, s, cfg.eps)
    out = []
    for rho in rhos:
        forest = build_forest(pattern, NavigationScheme.min_hop(rho))
        out.append(dead_end_fraction(forest, cfg.domain, s, cfg.eps) if inside.any() else 0.0)
    return out


def run_deadends(cfg: ExperimentConfig, threads: Optional[int] = None):
    """Dead-end fraction of bounded-range min-hop routing across the range sweep."""
    rhos = cfg.rho_list or ((cfg.scheme.range,) if math.isfinite(cfg.scheme.range) else ())
    if not rhos:
        raise ValueError("deadends needs rho_list or a finite scheme.range")
    rows = []
    for k, s in enumerate(cfg.s_list):
        tasks = [(cfg, k, i, rhos) for i in range(cfg.replicates)]
        frac = np.array(parallel_map(_dead_end_task, tasks, threads))
        for j, rho in enumerate(rhos):
            f = frac[:, j]
            rows.append((s, rho, f.mean(), f.std(ddof=1) / math.sqrt(len(f))))
    return rows
