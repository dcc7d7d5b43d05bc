"""Command-line entry point.

    dwmgrad run <config.json>      [--out DIR] [--seed N] [--log-every N] [--quiet]
    dwmgrad compare <config.json>  [...]
    dwmgrad sweep <config.json>    [... --workers N]
    dwmgrad check

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 check failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError, NumericalError
from . import checks
from .config import load_json, parse_compare, parse_run, parse_sweep
from .runner import compare, format_comparison, format_sweep, run, sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3

log = logging.getLogger("dwmgrad")


def _overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.log_every is not None:
        changes["log_every"] = args.log_every
    return cfg.replace(**changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _overrides(parse_run(load_json(args.config)), args)
    traj = run(cfg, args.out)
    log.info("%s: %d steps, final loss %.6g -> %s/%s.csv",
             cfg.label, len(traj), traj.records[-1].loss, args.out, cfg.label)
    return EXIT_OK


def cmd_compare(args) -> int:
    configs, threshold = parse_compare(load_json(args.config))
    configs = [_overrides(c, args) for c in configs]
    rows, _ = compare(configs, args.out, threshold)
    log.info("%s", format_comparison(rows, threshold).rstrip())
    return EXIT_OK


def cmd_sweep(args) -> int:
    base, grid = parse_sweep(load_json(args.config))
    base = _overrides(base, args)
    results = sweep(base, grid, args.out, workers=args.workers)
    log.info("%s", format_sweep(results).rstrip())
    return EXIT_OK


def cmd_check(args) -> int:
    results = checks.check()
    for r in results:
        log.info("%-12s %s  %s", r.group, "PASS" if r.passed else "FAIL", r.detail)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dwmgrad", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("compare", cmd_compare), ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--log-every", type=int, default=None, help="CSV row stride")
        p.add_argument("--quiet", action="store_true")
        if name == "sweep":
            p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=fn)
    p = sub.add_parser("check")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stdout, force=True)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
