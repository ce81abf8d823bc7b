"""Batch experiment runner.

``l1bsde run <config> [--parallel K] [--out DIR]`` executes the configured
suites, writes ``results.csv`` (schema
``experiment,instance,param,quantity,value,bound,slack,pass``, UTF-8, LF) and
``summary.json`` into the output directory, and exits nonzero when any
asserted row fails (1), the config is unreadable (2), or a size cap is hit
(3).  ``run --list`` prints the registered suite names.  ``l1bsde verify
<csv>`` re-checks a report's slack and pass columns.

Outputs are byte-identical across repeated runs with the same config and
seed: instance workers derive their generators from (seed, index) alone and
rows are sorted before writing, so ``--parallel`` does not change the bytes.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import os
import sys

from .config import CSV_HEADER, ConfigError, ExperimentConfig, ResultRow, load_config
from .experiments import make_instances, suite_names
from .lattice import CapExceededError

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_CAP = 3


def _run_instances(instances, parallel: int):
    if parallel <= 1:
        results = [job() for job in instances]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(lambda job: job(), instances))
    rows = [row for batch in results for row in batch]
    rows.sort(key=ResultRow.sort_key)
    return rows


def write_report(rows, out_dir: str, config: ExperimentConfig):
    os.makedirs(out_dir, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for row in rows:
        writer.writerow(row.to_csv_fields())
    csv_path = os.path.join(out_dir, "results.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    counts = {}
    for row in rows:
        bucket = counts.setdefault(row.experiment, {"pass": 0, "fail": 0})
        bucket["pass" if row.is_pass() else "fail"] += 1
    summary = {
        "config": {"name": config.name, "seed": config.seed},
        "rows": len(rows),
        "suites": counts,
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path


def cmd_run(args) -> int:
    if args.list:
        for name in suite_names():
            print(name)
        return EXIT_OK
    if not args.config:
        print("error: config path required (or use --list)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load_config(args.config)
        instances = make_instances(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or config.out_dir
    try:
        rows = _run_instances(instances, args.parallel)
    except CapExceededError as exc:
        print(f"cap violation: {exc}", file=sys.stderr)
        return EXIT_CAP
    csv_path = write_report(rows, out_dir, config)
    failures = [row for row in rows if not row.is_pass()]
    print(f"{len(rows)} rows -> {csv_path}; {len(failures)} failing")
    for row in failures[:20]:
        print(f"  FAIL {row.experiment}/{row.instance} {row.quantity} value={row.value!r} bound={row.bound!r}")
    return EXIT_ASSERTION if failures else EXIT_OK


def verify_report(path: str, tol: float = 1e-12) -> tuple[int, str]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            content = fh.read()
    except OSError as exc:
        return EXIT_CONFIG, f"cannot read report: {exc}"
    if not content.strip():
        return EXIT_CONFIG, "empty report"
    reader = csv.reader(io.StringIO(content))
    try:
        header = next(reader)
    except StopIteration:
        return EXIT_CONFIG, "empty report"
    if header != CSV_HEADER.split(","):
        return EXIT_CONFIG, f"bad header: {header}"
    bad = 0
    n = 0
    for line in reader:
        if len(line) != 8:
            return EXIT_CONFIG, f"malformed row: {line}"
        n += 1
        _, _, _, _, value_s, bound_s, slack_s, pass_s = line
        if pass_s not in ("true", "false"):
            return EXIT_CONFIG, f"malformed pass flag: {pass_s!r}"
        try:
            value = float(value_s)
        except ValueError:
            return EXIT_CONFIG, f"malformed value: {value_s!r}"
        if not bound_s:
            continue
        try:
            bound = float(bound_s)
            slack = float(slack_s)
        except ValueError:
            return EXIT_CONFIG, f"malformed bound/slack: {bound_s!r}/{slack_s!r}"
        scale = max(1.0, abs(bound), abs(value))
        if abs(slack - (bound - value)) > tol * scale:
            bad += 1
        elif (value <= bound + tol * scale) != (pass_s == "true"):
            bad += 1
    if bad:
        return EXIT_ASSERTION, f"{bad} inconsistent rows out of {n}"
    return EXIT_OK, f"{n} rows consistent"


def cmd_verify(args) -> int:
    code, message = verify_report(args.report)
    print(message)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l1bsde", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run experiment suites from a config file")
    run_p.add_argument("config", nargs="?", help="path to the key=value config")
    run_p.add_argument("--parallel", type=int, default=1, metavar="K",
                       help="run instances on K threads (output is unchanged)")
    run_p.add_argument("--out", help="output directory (overrides the config)")
    run_p.add_argument("--list", action="store_true", help="print registered experiments and exit")
    run_p.set_defaults(fn=cmd_run)
    ver_p = sub.add_parser("verify", help="re-check a results.csv report")
    ver_p.add_argument("report")
    ver_p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
