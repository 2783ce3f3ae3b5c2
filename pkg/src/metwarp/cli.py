"""Command line front end: ``metwarp verify`` and ``metwarp list-suites``."""

from __future__ import annotations

import argparse
import sys

from .errors import MetwarpError
from .report import emit_report
from .specfile import load_spec
from .suites import SUITES, merge_tolerances, run_suites

EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tol(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {key!r} is not a number: {value!r}") from None


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metwarp", description="Numerical verification of metallic warped-product identities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run verification suites against a spec file")
    v.add_argument("--spec", required=True, help="spec file path, or builtin:<name>?k=v&...")
    v.add_argument("--suite", action="append", choices=list(SUITES), metavar="NAME",
                   help="suite to run (repeatable); default: the suites listed in the spec")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=_positive, default=30)
    v.add_argument("--tol", action="append", type=_tol, default=[], metavar="KEY=VAL",
                   help="override a tolerance class (repeatable)")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.add_argument("--out", help="write the report here instead of standard output")
    v.add_argument("--workers", type=_positive, default=1, help="threads for per-sample evaluation")

    sub.add_parser("list-suites", help="print the available suite names")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-suites":
        for name in SUITES:
            print(name)
        return 0

    try:
        tol = merge_tolerances(dict(args.tol))
        spec = load_spec(args.spec)
    except MetwarpError as e:
        print(f"metwarp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    suites = args.suite or [s.name for s in spec.suites]
    if not suites:
        print("metwarp: error: no suites given and the spec requests none", file=sys.stderr)
        return EXIT_USAGE
    report = run_suites(spec, suites, seed=args.seed, samples=args.samples, tol_overrides=tol,
                        workers=args.workers)
    try:
        return emit_report(report, args.format, args.out)
    except OSError as e:
        print(f"metwarp: error: cannot write report: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
