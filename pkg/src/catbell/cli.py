"""Command-line entry point: ``catbell sweep|validate|figures|threshold``.

Exit codes: 0 ok, 1 validation failure, 2 bad config or usage, 3 model error.
The output directory defaults to ``$CATBELL_OUTDIR`` when ``--outdir`` is absent.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .bell import parameter_threshold
from .errors import CatBellError, ConfigError
from .experiment import FIGURES, load_config, preset_names, run_figures, run_sweep, with_overrides
from .validation import CHANNELS, run_validation

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_MODEL = 0, 1, 2, 3
OUTDIR_ENV = "CATBELL_OUTDIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _overrides(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _outdir(args):
    return args.outdir or os.environ.get(OUTDIR_ENV) or "."


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="catbell", description="Phase-space Bell tests for qubit-oscillator cat states.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV} or .)")
        sp.add_argument("--points", type=int, help="resample the grid with this many points")
        sp.add_argument("--restarts", type=int, help="optimizer restarts per point")
        sp.add_argument("--workers", type=int, help="concurrent sweep points")

    sw = sub.add_parser("sweep", help="run one configured sweep and write its CSV")
    sw.add_argument("config", help="INI file or preset name (see --list)")
    sw.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config value")
    sw.add_argument("--output", help="CSV file name, relative to the output directory")
    common(sw)

    va = sub.add_parser("validate", help="cross-check closed forms against the Fock oracle")
    va.add_argument("channels", nargs="*", help=f"subset of {', '.join(CHANNELS)}")
    va.add_argument("--points", type=int, default=50)
    va.add_argument("--seed", type=int, default=0)
    va.add_argument("--quiet", action="store_true", help="print only failures and the summary")

    fi = sub.add_parser("figures", help="write every curve of a figure plus a gnuplot script")
    fi.add_argument("which", help=f"one of {', '.join(FIGURES)}")
    common(fi)

    th = sub.add_parser("threshold", help="bisect a channel parameter for max |B| = 2")
    th.add_argument("config", help="INI file or preset whose sweep is a channel parameter")
    th.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    th.add_argument("--lo", type=float, required=True)
    th.add_argument("--hi", type=float, required=True)
    th.add_argument("--tol", type=float, default=1e-3)
    th.add_argument("--restarts", type=int)

    sub.add_parser("list", help="list the shipped presets")
    return p


def _cmd_sweep(args):
    over = _overrides(args.set)
    if args.output:
        over["experiment.output"] = args.output
    cfg = with_overrides(load_config(args.config, over), args.points, args.restarts, args.workers)
    print(run_sweep(cfg, _outdir(args)))
    return EXIT_OK


def _cmd_validate(args):
    bad = [c for c in args.channels if c not in CHANNELS]
    if bad:
        raise ConfigError(f"unknown channel(s) {bad}; expected a subset of {list(CHANNELS)}")
    if args.points < 1:
        raise ConfigError("--points must be >= 1")
    report = run_validation(args.channels or None, n_points=args.points, seed=args.seed)
    for c in report.comparisons:
        if not (args.quiet and c.passed):
            print(c.line())
    print(report.summary())
    print("OK" if report.passed else f"FAILED: {len(report.failures())} comparison(s)")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _cmd_figures(args):
    for path in run_figures(args.which, _outdir(args), args.points, args.restarts, args.workers):
        print(path)
    return EXIT_OK


def _cmd_threshold(args):
    cfg = with_overrides(load_config(args.config, _overrides(args.set)), restarts=args.restarts)
    if cfg.sweeps_dynamical:
        raise ConfigError("threshold needs a config whose sweep is a channel parameter")
    if not args.hi > args.lo:
        raise ConfigError("--hi must exceed --lo")
    value = parameter_threshold(cfg.model_at, cfg.t, args.lo, args.hi, cfg.optimizer, tol=args.tol)
    print(f"{cfg.sweep_name} = {value:.6f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"sweep": _cmd_sweep, "validate": _cmd_validate, "figures": _cmd_figures,
                "threshold": _cmd_threshold}
    try:
        if args.command == "list":
            print("\n".join(preset_names()))
            return EXIT_OK
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"catbell: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CatBellError, ValueError, ArithmeticError) as exc:
        print(f"catbell: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
