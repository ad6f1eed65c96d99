"""Command-line front end.

    risisac run    [--config PATH] [--seed S] [--method M] [--out PATH] [--dump-channels PATH]
    risisac sweep  SPEC [--config PATH] [--seed S] [--trials N] [--method LIST] [--out PATH] [--jobs J]
    risisac check  [--seed S]

Exit codes: 0 success, 1 invalid input, 2 every trial of a run (or of some
sweep cell) failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .checks import run_checks
from .driver import METHODS
from .scenario import ConfigError, ScenarioGeometry, desk_config, load_config
from .sweep import emit_csv, format_csv, load_sweep_spec, run_sweep, run_trial

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


def _methods(text: str) -> tuple:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {', '.join(METHODS)}")
    return methods


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; argparse's own 2 is reserved for failed trials."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="risisac", description="RIS-assisted ISAC beamforming and reflection design")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve one channel realization and print the report as JSON")
    run.add_argument("--config", type=Path, help="scenario YAML (default: built-in desk scenario)")
    run.add_argument("--seed", type=_seed, help="overrides system.seed")
    run.add_argument("--method", default="proposed", choices=METHODS)
    run.add_argument("--out", type=Path, help="write the report here instead of stdout")
    run.add_argument("--dump-channels", type=Path, help="save the channel realization as .npz")

    sweep = sub.add_parser("sweep", help="Monte-Carlo sweep; writes CSV")
    sweep.add_argument("spec", type=Path, help="sweep spec YAML")
    sweep.add_argument("--config", type=Path, help="scenario YAML, overrides the sweep file's base")
    sweep.add_argument("--seed", type=_seed)
    sweep.add_argument("--trials", type=_positive_int)
    sweep.add_argument("--method", type=_methods, help="comma-separated subset of " + ",".join(METHODS))
    sweep.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    sweep.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")

    check = sub.add_parser("check", help="run the randomized invariant and oracle checks")
    check.add_argument("--seed", type=_seed, default=0)
    return parser


def _cmd_run(args) -> int:
    if args.config:
        config, geometry = load_config(args.config)
    else:
        config, geometry = desk_config(), ScenarioGeometry()
    seed = config.seed if args.seed is None else args.seed
    cs, report = run_trial(config, geometry, seed, 0, args.method)
    if args.dump_channels:
        cs.save(args.dump_channels)
    text = report.to_json(indent=2)
    if args.out:
        args.out.write_text(text + "\n")
    else:
        print(text)
    logging.info("%s: %s after %d iterations, sum-rate %.4f", args.method, report.termination,
                 report.iterations, report.sum_rate)
    return EXIT_FAILED if report.termination in ("infeasible", "degenerate") else EXIT_OK


def _cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec)
    if args.config:
        spec.config, spec.geometry = load_config(args.config)
    if args.seed is not None:
        spec.seed = args.seed
    if args.trials is not None:
        spec.trials = args.trials
    if args.method is not None:
        spec.methods = args.method
    spec.check()
    result = run_sweep(spec, jobs=args.jobs)
    if args.out:
        emit_csv(result, args.out)
    else:
        sys.stdout.write(format_csv(result))
    for row in result.flagged:
        logging.error("all %d trials failed: %s at %s=%s", row.trials, row.method, row.param, row.value)
    return EXIT_FAILED if result.flagged else EXIT_OK


def _cmd_check(args) -> int:
    results = run_checks(args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail} [{r.seconds:.2f} s]")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVALID


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "check": _cmd_check}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
