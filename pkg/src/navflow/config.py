"""Flat ``key = value`` experiment configuration.

Example::

    mode = directed
    dimension = 2
    domain.kind = box
    domain.half_widths = 0.5, 0.5
    lambda.kind = constant
    lambda.value = 1
    mu.kind = affine
    mu.offset = 0.5
    mu.gradient = 1, 0
    scheme.kind = dst
    x = 0.25, 0
    s_list = 100, 200, 400
    replicates = 200
    master_seed = 20240601

Blank lines and ``#`` comments are ignored.  Field kinds: ``constant``
(``value``), ``affine`` (``offset``, ``gradient``), ``radial`` (``radii``,
``values``) and ``grid`` (``path`` to a CSV raster, relative to the config
file).  Scheme kinds: ``dst``, ``cone_directed``, ``rst``, ``cone_radial``
(``half_angle`` in radians) and ``min_hop`` (``range``).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .geometry import DIRECTED, RADIAL, Domain
from .navigation import NavigationScheme
from .pointprocess import (Affine, Constant, IntensityField, Radial,
                           load_grid_csv)
from .pointprocess import ConfigError as _FieldError


class ConfigError(ValueError):
    """Invalid configuration; ``str()`` is a one-line diagnostic."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None and line is not None:
            where = f"{source}:{line}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


KNOWN_KEYS = {
    "mode", "dimension", "domain.kind", "domain.half_widths", "domain.radius",
    "scheme.kind", "scheme.half_angle", "scheme.range",
    "x", "s_list", "replicates", "g_exponent", "h_exponent", "eps", "master_seed",
    "output", "locations", "rho_list", "render",
}
FIELD_KEYS = {"kind", "value", "offset", "gradient", "radii", "values", "path"}


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    dimension: int
    domain: Domain
    lam: IntensityField
    mu: IntensityField
    scheme: NavigationScheme
    x: tuple
    s_list: tuple
    replicates: int
    g_exponent: float = 0.6
    h_exponent: float = 0.55
    eps: float = 0.05
    master_seed: int = 0
    output: str = "out"
    locations: tuple = ()
    rho_list: tuple = ()
    render: bool = False
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def g(self, s: float) -> float:
        return s ** self.g_exponent

    def h(self, s: float) -> float:
        return s ** self.h_exponent

    def with_(self, **changes) -> "ExperimentConfig":
        cfg = replace(self, **changes)
        validate(cfg)
        return cfg


def _floats(text, key, line):
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}", line) from None
    if not vals:
        raise ConfigError(f"{key}: empty list", line)
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{key}: values must be finite", line)
    return vals


def _float(text, key, line):
    vals = _floats(text, key, line)
    if len(vals) != 1:
        raise ConfigError(f"{key}: expected one number", line)
    return vals[0]


def _int(text, key, line):
    try:
        return int(text.strip(), 0)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}", line) from None


def _bool(text, key, line):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}", line)


def read_pairs(text: str, source=None) -> dict:
    """``{key: (value, line)}`` from the config text."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key", lineno, source)
        if key in pairs:
            raise ConfigError(f"duplicate key {key!r}", lineno, source)
        pairs[key] = (value, lineno)
    return pairs


def _field(prefix, pairs, domain, base_dir, source):
    sub = {k[len(prefix) + 1:]: v for k, v in pairs.items() if k.startswith(prefix + ".")}
    if "kind" not in sub:
        raise ConfigError(f"missing {prefix}.kind", None, source)
    kind, line = sub["kind"]
    try:
        if kind == "constant":
            return Constant(_float(*_need(sub, "value", prefix, line)))
        if kind == "affine":
            grad = _floats(*_need(sub, "gradient", prefix, line))
            if len(grad) != domain.d:
                raise ConfigError(f"{prefix}.gradient needs {domain.d} entries", sub["gradient"][1])
            return Affine(_float(*_need(sub, "offset", prefix, line)), grad)
        if kind == "radial":
            return Radial(_floats(*_need(sub, "radii", prefix, line)),
                          _floats(*_need(sub, "values", prefix, line)))
        if kind == "grid":
            path, pline = sub.get("path", (None, line))
            if not path:
                raise ConfigError(f"missing {prefix}.path", line)
            full = path if os.path.isabs(path) else os.path.join(base_dir, path)
            try:
                return load_grid_csv(full, domain)
            except OSError as exc:
                raise ConfigError(f"{prefix}.path: cannot read {full}: {exc.strerror}", pline) from None
    except _FieldError as exc:
        raise ConfigError(f"{prefix}: {exc}", line) from None
    raise ConfigError(f"{prefix}.kind: unknown field kind {kind!r}", line)


def _need(sub, key, prefix, line):
    if key not in sub:
        raise ConfigError(f"missing {prefix}.{key}", line)
    value, vline = sub[key]
    return value, f"{prefix}.{key}", vline


def parse_config(text: str, source=None, base_dir: str = ".") -> ExperimentConfig:
    pairs = read_pairs(text, source)
    try:
        return _build(pairs, source, base_dir)
    except ConfigError as exc:
        if exc.source is None and source is not None:
            raise ConfigError(str(exc).split(": ", 1)[-1] if exc.line else str(exc),
                              exc.line, source) from None
        raise


def _build(pairs, source, base_dir):
    for key, (_, line) in pairs.items():
        head, _, tail = key.partition(".")
        if key in KNOWN_KEYS or (head in ("lambda", "mu") and tail in FIELD_KEYS):
            continue
        raise ConfigError(f"unknown key {key!r}", line)

    def get(key, default=None, required=False):
        if key in pairs:
            return pairs[key]
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default, None

    mode, mline = get("mode", required=True)
    if mode not in (DIRECTED, RADIAL):
        raise ConfigError(f"mode must be 'directed' or 'radial', got {mode!r}", mline)
    dim_text, dline = get("dimension", "2")
    d = _int(dim_text, "dimension", dline)
    if d not in (2, 3):
        raise ConfigError("dimension must be 2 or 3", dline)

    kind, kline = get("domain.kind", required=True)
    if kind == "box":
        hw_text, hline = get("domain.half_widths", required=True)
        hw = _floats(hw_text, "domain.half_widths", hline)
        if len(hw) != d or min(hw) <= 0:
            raise ConfigError(f"domain.half_widths needs {d} positive entries", hline)
        domain = Domain.box(hw)
    elif kind == "ball":
        r_text, rline = get("domain.radius", required=True)
        r = _float(r_text, "domain.radius", rline)
        if r <= 0:
            raise ConfigError("domain.radius must be positive", rline)
        domain = Domain.ball(r, d)
    else:
        raise ConfigError(f"domain.kind must be 'box' or 'ball', got {kind!r}", kline)

    lam = _field("lambda", pairs, domain, base_dir, source)
    mu = _field("mu", pairs, domain, base_dir, source)

    sk, sline = get("scheme.kind", required=True)
    try:
        if sk in ("cone_directed", "cone_radial"):
            ha, hline = get("scheme.half_angle", required=True)
            scheme = NavigationScheme(sk, half_angle=_float(ha, "scheme.half_angle", hline))
        elif sk == "min_hop":
            rg, rline = get("scheme.range", required=True)
            scheme = NavigationScheme(sk, range=_float(rg, "scheme.range", rline))
        else:
            scheme = NavigationScheme(sk)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"scheme: {exc}", sline) from None

    x_text, xline = get("x", required=True)
    x = _floats(x_text, "x", xline)
    s_text, s_line = get("s_list", required=True)
    s_list = _floats(s_text, "s_list", s_line)
    m_text, m_line = get("replicates", required=True)
    replicates = _int(m_text, "replicates", m_line)

    def opt_float(key, default):
        text, line = get(key)
        return default if text is None else _float(text, key, line)

    seed_text, seed_line = get("master_seed", "0")
    seed = _int(seed_text, "master_seed", seed_line)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("master_seed must be a 64-bit unsigned integer", seed_line)

    loc_text, loc_line = get("locations")
    locations = ()
    if loc_text:
        locations = tuple(_floats(p, "locations", loc_line) for p in loc_text.split(";") if p.strip())
    rho_text, rho_line = get("rho_list")
    rho_list = _floats(rho_text, "rho_list", rho_line) if rho_text else ()
    render_text, render_line = get("render", "false")

    lines = {k: v[1] for k, v in pairs.items()}
    cfg = ExperimentConfig(
        mode=mode, dimension=d, domain=domain, lam=lam, mu=mu, scheme=scheme, x=x,
        s_list=s_list, replicates=replicates,
        g_exponent=opt_float("g_exponent", 0.6), h_exponent=opt_float("h_exponent", 0.55),
        eps=opt_float("eps", 0.05), master_seed=seed,
        output=get("output", "out")[0], locations=locations, rho_list=rho_list,
        render=_bool(render_text, "render", render_line), lines=lines,
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    line = cfg.lines.get
    d = cfg.dimension
    if cfg.domain.d != d:
        raise ConfigError("domain dimension differs from 'dimension'", line("domain.kind"))
    if cfg.scheme.mode != cfg.mode:
        raise ConfigError(f"scheme {cfg.scheme.kind!r} is not a {cfg.mode} scheme", line("scheme.kind"))
    if len(cfg.x) != d:
        raise ConfigError(f"x needs {d} coordinates", line("x"))
    x = np.asarray(cfg.x)
    if not cfg.domain.contains(x, tol=0.0) or _on_boundary(cfg.domain, x):
        raise ConfigError("x must lie inside the domain", line("x"))
    if cfg.mode == RADIAL and not np.any(x != 0):
        raise ConfigError("radial experiments need x != o", line("x"))
    for loc in cfg.locations:
        if len(loc) != d or not cfg.domain.contains(np.asarray(loc), tol=0.0):
            raise ConfigError("every location must be a point of the domain", line("locations"))
    if cfg.replicates < 2:
        raise ConfigError("replicates must be at least 2", line("replicates"))
    s = cfg.s_list
    if not s or any(v < 1 for v in s) or any(b <= a for a, b in zip(s, s[1:])):
        raise ConfigError("s_list must be strictly increasing with entries >= 1", line("s_list"))
    if not (0 < cfg.h_exponent < cfg.g_exponent < 1):
        raise ConfigError("need 0 < h_exponent < g_exponent < 1",
                          line("h_exponent") or line("g_exponent"))
    if not 0 <= cfg.eps < cfg.domain.inradius:
        raise ConfigError("eps must lie in [0, inradius)", line("eps"))
    if any(r <= 0 for r in cfg.rho_list):
        raise ConfigError("rho_list entries must be positive", line("rho_list"))


def _on_boundary(domain: Domain, x) -> bool:
    if domain.kind == "box":
        return bool(np.any(np.abs(x) >= np.asarray(domain.half_widths)))
    return float(np.linalg.norm(x)) >= domain.radius


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, source=path, base_dir=os.path.dirname(os.path.abspath(path)))
