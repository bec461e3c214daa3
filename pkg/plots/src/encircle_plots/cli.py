"""Command line: one figure per invocation.

Exit codes: 0 success, 1 figure error (missing column, empty range),
2 unreadable or malformed trace.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, EmptyRangeError, PlotSpec, parse_k_range, render
from .trace import MissingColumnError, PlotError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="encircle-plot",
        description="Render figures from a simulation trace file",
    )
    parser.add_argument("trace", help="path to trace.csv")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument(
        "--k",
        default=None,
        metavar="RANGE",
        help="step selection: 'A:B' half-open, or a bare K for steps 0..K",
    )
    parser.add_argument("--out", required=True, help="output image path (.png/.svg/.pdf)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(
            trace=args.trace, kind=args.kind, out=args.out, k_range=parse_k_range(args.k)
        )
        written = render(spec)
    except (MissingColumnError, EmptyRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {written}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
