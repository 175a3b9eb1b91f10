"""
Command-line entry point: netwave simulate | analyze | verify
"""

import argparse
import logging
import sys

from src.cli.commands import analyze, simulate, verify
from src.exceptions import NetwaveError


def parse_times(text):
    try:
        times = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid time list {text!r}")
    if not times or any(t < 0 for t in times):
        raise argparse.ArgumentTypeError("times must be a comma-separated list of values >= 0")
    return times


def build_parser():
    parser = argparse.ArgumentParser(
        prog="netwave",
        description="Exact solutions and long-time analysis of hyperbolic systems on networks",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="write CSV snapshots at given times")
    sim.add_argument("scenario", help="scenario JSON file")
    sim.add_argument("--times", type=parse_times, default=None,
                     help="comma-separated times (default: run.times)")
    sim.add_argument("--out", default="output", help="output directory")
    sim.add_argument("--oracle-only", action="store_true",
                     help="use the upwind/characteristics oracle instead of the closed form")
    sim.add_argument("--grid", type=int, default=None, help="upwind cells per edge")
    sim.add_argument("--plot", action="store_true", help="also render snapshots.png")

    ana = commands.add_parser("analyze", help="spectral and asymptotic report")
    ana.add_argument("scenario", help="scenario JSON file")
    ana.add_argument("--json", dest="json_path", default=None, help="machine-readable report")

    ver = commands.add_parser("verify", help="run the seeded invariant suites")
    ver.add_argument("scenario", help="scenario JSON file")
    ver.add_argument("--seed", type=int, default=None, help="random seed (default: run.seed)")
    return parser


def main(argv=None):
    """
    Run one command and return its exit code

    Exit codes: 0 success, 1 failed checks or other errors, 2 scenario
    errors, 3 no common reference time, 4 assembly errors, 5 ambiguous
    eigenvalue clusters.
    """

    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "simulate":
            simulate(args.scenario, args.out, times=args.times, oracle_only=args.oracle_only,
                     grid=args.grid, plot=args.plot)
        elif args.command == "analyze":
            analyze(args.scenario, json_path=args.json_path)
        else:
            report = verify(args.scenario, seed=args.seed)
            if report.failed:
                return 1
    except NetwaveError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 1
    return 0
