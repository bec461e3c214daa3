#!/usr/bin/env python3
"""Sweep the forgetting factor on the bundled scenario.

Prints how fast the center estimate settles and how tight the
anti-synchronization error ends up for each value.  Values outside the
(0, 0.5) stability gate are reported as rejected instead of run.
"""

import argparse
import sys

import numpy as np

from encirclesim.harness import gain_report, run, summarize
from encirclesim.scenario import apply_override, paper_sim, parse_scenario

DEFAULT_VALUES = (0.05, 0.1, 0.2, 0.3, 0.4, 0.49)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--values",
        type=float,
        nargs="+",
        default=list(DEFAULT_VALUES),
        help="forgetting factors to try",
    )
    parser.add_argument("--steps", type=int, default=400)
    args = parser.parse_args()

    print(f"{'forgetting':>10}  {'status':<10}  {'center settles':>14}  {'sync sup':>10}")
    for value in args.values:
        doc = paper_sim()
        doc["run"]["steps"] = args.steps
        apply_override(doc, f"estimator.forgetting={value}")
        try:
            scenario = parse_scenario(doc)
        except Exception as exc:
            print(f"{value:>10g}  {'invalid':<10}  {exc}")
            continue
        if not gain_report(scenario).all_passed:
            print(f"{value:>10g}  {'rejected':<10}  {'outside gate':>14}")
            continue
        result = run(scenario)
        if result.aborted:
            print(f"{value:>10g}  {'aborted':<10}  step {result.abort['step']:>8}")
            continue
        summary = summarize(result.records, scenario.post_transient_fraction)
        settled = summary["errors"]["center_error"]["settled_at"]
        sup = summary["errors"]["sync_error"]["sup_norm_post"]
        settled_text = "never" if settled is None else str(settled)
        print(f"{value:>10g}  {'ok':<10}  {settled_text:>14}  {sup:>10.4g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
