"""Benchmark command line.

Exit codes: 0 success, 1 usage error, 2 graph validation error, 3 deadlock.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import Workload, json_doc, run_condition, write_csv
from .builder import CommitError
from .engine import DeadlockError


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    p = _Parser(prog="dagrt-bench",
                description="Run one join-latency benchmark cell and write its samples.")
    p.add_argument("--condition", required=True, choices=["fass", "exact", "approx"],
                   help="fass: the task runtime; exact/approx: the pub/sub baseline "
                        "under the respective matching policy")
    p.add_argument("--max-interval-ms", type=int, choices=[10, 30, 50],
                   help="matching tolerance, required for --condition approx")
    p.add_argument("--n", type=int, required=True, choices=[2, 4, 6],
                   help="parallel width of the fork-join workload")
    p.add_argument("--jobs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clock", choices=["virtual", "wall"], default="virtual")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--verbose", action="store_true")
    return p


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.condition == "approx" and args.max_interval_ms is None:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: --condition approx requires --max-interval-ms",
              file=sys.stderr)
        return 1
    if args.condition != "approx" and args.max_interval_ms is not None:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: --max-interval-ms only applies to approx",
              file=sys.stderr)
        return 1
    if args.jobs < 0:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: --jobs must be >= 0", file=sys.stderr)
        return 1

    workload = Workload(n=args.n, jobs=args.jobs, seed=args.seed)
    try:
        result = run_condition(args.condition, workload,
                               max_interval_ms=args.max_interval_ms,
                               clock=args.clock)
    except DeadlockError as e:
        print(f"deadlock: {e}", file=sys.stderr)
        return 3
    except (CommitError, ValueError) as e:
        print(f"invalid run: {e}", file=sys.stderr)
        return 2

    if args.format == "csv":
        if args.out:
            with open(args.out, "w", newline="") as f:
                write_csv(result, f)
        else:
            write_csv(result, sys.stdout)
    else:
        doc = json_doc(result)
        if args.out:
            with open(args.out, "w") as f:
                json.dump(doc, f, indent=2)
                f.write("\n")
        else:
            json.dump(doc, sys.stdout, indent=2)
            sys.stdout.write("\n")
    print(json.dumps(result.summary()), file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(cli_main())
