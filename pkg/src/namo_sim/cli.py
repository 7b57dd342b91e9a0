"""namo-sim command line entry point."""

from __future__ import annotations

import argparse
import sys

from .sim import (PERCEPTION_ORACLE, PERCEPTION_RENDERED, ScenarioError,
                  load_scenario, run_scenario)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_STUCK = 2
EXIT_MAX_TICKS = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="namo-sim",
        description="Deterministic 2D navigation-among-movable-obstacles simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("--scenario", required=True, help="scenario JSON path")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--svg-every", type=int, default=0, metavar="TICKS",
                     help="write an SVG frame every N ticks (0 = never)")
    run.add_argument("--max-ticks", type=int, default=None)
    run.add_argument("--perception", choices=[PERCEPTION_RENDERED, PERCEPTION_ORACLE],
                     default=PERCEPTION_ORACLE)
    run.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
    except (OSError, ValueError) as e:
        print(f"error: cannot read scenario: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ScenarioError as e:
        for problem in e.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION

    report = run_scenario(scenario, perception_mode=args.perception,
                          out_dir=args.out, svg_every=args.svg_every,
                          max_ticks=args.max_ticks, quiet=args.quiet)
    if report.success:
        return EXIT_OK
    return EXIT_STUCK if report.outcome == "stuck" else EXIT_MAX_TICKS


if __name__ == "__main__":
    sys.exit(main())
