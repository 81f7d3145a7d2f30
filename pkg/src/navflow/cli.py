"""``navflow <subcommand> --config PATH [--threads N] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import experiment as ex
from .config import ConfigError, load_config
from .flow import trajectory
from .geometry import CrossingSurface
from .render import UnsupportedRender, render_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

log = logging.getLogger("navflow")


def _render(cfg, out, s_index=0, replicate=0):
    s = cfg.s_list[s_index]
    real = ex.realize(cfg, s_index, replicate)
    surface = CrossingSurface(cfg.mode, cfg.x, s, cfg.g(s))
    members = ex.crossing_set(real.forest, surface).members
    path = None
    if len(members):
        # the busiest crossing link, followed to its end
        start = int(members[np.argmax(real.delta[members])])
        path = trajectory(start, real.forest)
    svg = render_svg(real.pattern.points, real.forest, cfg.domain, s, surface, path)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "pattern.svg"), "w") as fh:
        fh.write(svg)


def cmd_traffic(cfg, out, threads):
    results = ex.run_traffic(cfg, threads)
    for sm in ex.write_traffic(cfg, results, out):
        log.info("s=%g lhs*lambda_hat=%.4f rhs=%.4f rel_err=%.3f event_fail=%.3f",
                 sm.s, sm.lhs * sm.lambda_hat, sm.rhs, sm.rel_err, sm.event_fail_freq)
    if cfg.render and cfg.dimension == 2:
        _render(cfg, out)


def cmd_subball(cfg, out, threads):
    rows = ex.run_subball(cfg, threads)
    fit = ex.write_subball(rows, out)
    if fit:
        log.info("fluctuation exponent %.3f", fit[0][0])


def cmd_linkdensity(cfg, out, threads):
    rows = ex.run_linkdensity(cfg, threads)
    os.makedirs(out, exist_ok=True)
    ex.write_csv(os.path.join(out, "linkdensity.csv"), ex.linkdensity_header(cfg.dimension), rows)


def cmd_deadends(cfg, out, threads):
    rows = ex.run_deadends(cfg, threads)
    os.makedirs(out, exist_ok=True)
    ex.write_csv(os.path.join(out, "deadends.csv"), ("s", "rho", "dead_end_frac", "se"), rows)


def cmd_render(cfg, out, threads):
    if cfg.dimension != 2:
        raise UnsupportedRender("only planar experiments can be rendered")
    _render(cfg, out)


COMMANDS = {
    "traffic": cmd_traffic,
    "subball": cmd_subball,
    "linkdensity": cmd_linkdensity,
    "deadends": cmd_deadends,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="navflow", description="Traffic flow on navigation forests.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--out", default=None, help="output directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("navflow: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"navflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"navflow: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    out = args.out or cfg.output
    try:
        COMMANDS[args.command](cfg, out, args.threads)
    except (UnsupportedRender, ValueError) as exc:
        print(f"navflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"navflow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
