"""Command line: ``irs-maxmin run|scenario|selftest``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from . import selftest
from .harness import Scenario, load_spec, run_sweep, write_csv


def _cmd_run(args) -> int:
    spec = load_spec(args.config)
    rows = run_sweep(spec, workers=args.workers)
    out = args.out or spec.output
    write_csv(rows, out)
    failed = sum(1 for r in rows if r.termination in ("solver_failure", "inapplicable", "error"))
    print(f"wrote {len(rows)} rows to {out} ({failed} failed runs)")
    return 0


def _cmd_scenario(args) -> int:
    print(json.dumps(asdict(Scenario()), indent=2))
    return 0


def _cmd_selftest(args) -> int:
    return 0 if selftest.run() else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="irs-maxmin", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a sweep described by a JSON experiment file")
    p_run.add_argument("--config", required=True, help="experiment JSON file")
    p_run.add_argument("--out", help="CSV output path (default: the file's 'output' field)")
    p_run.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: IRS_MAXMIN_WORKERS or 1)")
    p_run.set_defaults(func=_cmd_run)
    p_sc = sub.add_parser("scenario", help="scenario utilities")
    sc_sub = p_sc.add_subparsers(dest="action", required=True)
    sc_sub.add_parser("print-default", help="print the default scenario as JSON").set_defaults(func=_cmd_scenario)
    sub.add_parser("selftest", help="run quick invariant checks").set_defaults(func=_cmd_selftest)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
