#!/usr/bin/env python3
"""Run the bundled reference scenario and write trace + metadata.

Equivalent to `encircle run paper-sim`, kept as a script so the run is
easy to tweak in place while experimenting.
"""

import argparse
import sys
from pathlib import Path

from encirclesim.harness import format_summary, run, write_outputs
from encirclesim.scenario import apply_override, paper_sim, parse_scenario


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/paper-sim", help="output directory")
    parser.add_argument("--steps", type=int, default=None, help="override run.steps")
    parser.add_argument("--seed", type=int, default=None, help="override run.seed")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="PATH=VALUE",
        help="extra dotted-path overrides",
    )
    args = parser.parse_args()

    doc = paper_sim()
    if args.steps is not None:
        doc["run"]["steps"] = args.steps
    if args.seed is not None:
        doc["run"]["seed"] = args.seed
    for assignment in args.override:
        apply_override(doc, assignment)

    scenario = parse_scenario(doc)
    result = run(scenario)
    summary = write_outputs(result, args.out)
    print(f"wrote {Path(args.out) / 'trace.csv'}")
    print(format_summary(summary, result.abort))
    return 3 if result.aborted else 0


if __name__ == "__main__":
    sys.exit(main())
