"""Command-line front end: validate, run, sweep, version.

Exit codes: 0 success, 1 validation failure, 2 input/parse error,
3 run aborted (divergence or a numerical failure; the partial trace is
kept either way).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import re
import sys
from copy import deepcopy
from pathlib import Path

from . import __version__
from .errors import ConfigError, EncircleError, ScenarioParseError
from .harness import format_summary, gain_report, run, speed_margin, write_outputs
from .scenario import apply_override, load_scenario, paper_sim, parse_scenario

OUT_DIR_ENV = "ENCIRCLE_OUT_DIR"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARSE = 2
EXIT_ABORTED = 3


def _load_document(path: str) -> dict:
    if path == "paper-sim":
        return paper_sim()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {p}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"{p}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def _prepare_document(args) -> dict:
    doc = _load_document(args.scenario)
    for assignment in args.override or []:
        apply_override(doc, assignment)
    if getattr(args, "seed", None) is not None:
        if not isinstance(doc.get("run"), dict):
            raise ScenarioParseError("scenario has no run section to set the seed in")
        doc["run"]["seed"] = args.seed
    return doc


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_DIR_ENV, "runs"))


def _emit(args, text: str) -> None:
    if not args.quiet:
        print(text)


def cmd_validate(args) -> int:
    doc = _prepare_document(args)
    scenario = parse_scenario(doc)
    report = gain_report(scenario)
    _emit(args, report.format_text())
    margin = speed_margin(scenario)
    if not margin["ok"]:
        _emit(
            args,
            "warning: scripted target speed {target_max_speed:.4g} reaches the "
            "worst-case agent step bound {agent_step_bound:.4g}".format(**margin),
        )
    return EXIT_OK if report.all_passed else EXIT_VALIDATION


def cmd_run(args) -> int:
    doc = _prepare_document(args)
    scenario = parse_scenario(doc)
    report = gain_report(scenario)
    if not report.all_passed and not args.force:
        _emit(args, report.format_text())
        print("gain validation failed; rerun with --force to simulate anyway", file=sys.stderr)
        return EXIT_VALIDATION
    result = run(scenario)
    out = _out_dir(args)
    summary = write_outputs(result, out)
    _emit(args, f"wrote {out / 'trace.csv'} and {out / 'meta.json'}")
    _emit(args, format_summary(summary, result.abort))
    if result.aborted:
        print(
            f"run aborted at step {result.abort['step']}: {result.abort['flag']}",
            file=sys.stderr,
        )
        return EXIT_ABORTED
    return EXIT_OK


def _sanitize(value_text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]", "_", value_text) or "value"


def _sweep_worker(payload):
    """Run one sweep value; executed in a worker process."""
    index, value_text, doc, force, out_dir = payload
    try:
        scenario = parse_scenario(doc)
    except ScenarioParseError as exc:
        return index, {"value": value_text, "status": "parse-error", "detail": str(exc)}
    try:
        report = gain_report(scenario)
    except EncircleError as exc:
        return index, {"value": value_text, "status": "validation-error", "detail": str(exc)}
    entry = {"value": value_text, "validation_passed": report.all_passed}
    if not report.all_passed and not force:
        entry["status"] = "validation-failed"
        return index, entry
    result = run(scenario)
    summary = write_outputs(result, out_dir)
    entry["out_dir"] = out_dir
    if result.aborted:
        entry["status"] = f"aborted:{result.abort['flag']}"
        entry["abort_step"] = result.abort["step"]
    else:
        entry["status"] = "ok"
        sync = summary["errors"]["sync_error"]
        entry["sync_sup_post"] = sync["sup_norm_post"]
        entry["sync_settled_at"] = sync["settled_at"]
        entry["min_target_distance"] = summary["min_target_distance"]["overall"]
    return index, entry


def cmd_sweep(args) -> int:
    base_doc = _prepare_document(args)
    values = [v.strip() for v in (args.values or "").split(",") if v.strip()]
    if not values:
        _emit(args, "no sweep values given; nothing to run")
        return EXIT_OK
    out_root = _out_dir(args)
    out_root.mkdir(parents=True, exist_ok=True)
    payloads = []
    for i, value_text in enumerate(values):
        doc = deepcopy(base_doc)
        apply_override(doc, f"{args.param}={value_text}")
        run_dir = out_root / f"{i:03d}_{_sanitize(value_text)}"
        payloads.append((i, value_text, doc, bool(args.force), str(run_dir)))
    results = {}
    max_workers = min(len(payloads), os.cpu_count() or 1)
    with concurrent.futures.ProcessPoolExecutor(max_workers=max_workers) as pool:
        for index, entry in pool.map(_sweep_worker, payloads):
            results[index] = entry
    table = [results[i] for i in sorted(results)]
    aggregate_path = out_root / "aggregate.json"
    aggregate_path.write_text(
        json.dumps({"param": args.param, "runs": table}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    if not args.quiet:
        print(f"{'value':>16}  {'status':<22}  {'sync sup':>10}  {'settled':>8}")
        for entry in table:
            sup = entry.get("sync_sup_post")
            settled = entry.get("sync_settled_at")
            sup_text = "" if sup is None else format(sup, ".4g")
            settled_text = "" if settled is None else str(settled)
            print(
                f"{entry['value']:>16}  {entry['status']:<22}  "
                f"{sup_text:>10}  {settled_text:>8}"
            )
        print(f"wrote {aggregate_path}")
    return EXIT_OK


def cmd_version(args) -> int:
    print(__version__)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="encircle",
        description="Range-only center estimation and encirclement simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_out=True):
        p.add_argument("scenario", help="scenario JSON path, or 'paper-sim' for the bundled one")
        p.add_argument(
            "--override",
            action="append",
            metavar="PATH=VALUE",
            help="dotted-path override applied before parsing, repeatable",
        )
        p.add_argument("--seed", type=int, default=None, help="replace run.seed")
        p.add_argument("--quiet", action="store_true", help="suppress normal output")
        if with_out:
            p.add_argument(
                "--out",
                default=None,
                help=f"output directory (default: ${OUT_DIR_ENV} or ./runs)",
            )

    p_validate = sub.add_parser("validate", help="check schema and stability gates")
    add_common(p_validate, with_out=False)
    p_validate.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="simulate one scenario")
    add_common(p_run)
    p_run.add_argument(
        "--force", action="store_true", help="run even when gain validation fails"
    )
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the scenario once per parameter value")
    add_common(p_sweep)
    p_sweep.add_argument("--param", required=True, help="dotted path of the swept value")
    p_sweep.add_argument("--values", required=True, help="comma-separated value list")
    p_sweep.add_argument(
        "--force", action="store_true", help="run values that fail gain validation"
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_version = sub.add_parser("version", help="print the package version")
    p_version.set_defaults(func=cmd_version)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except EncircleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORTED


if __name__ == "__main__":
    sys.exit(main())
