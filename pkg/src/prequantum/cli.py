"""Command line entry point: ``prequantum analyze | verify | list-scenarios``.

Exit codes: 0 when every check passes, 1 when a check fails (including quadrature
that misses the tolerance on the requested grid), 2 on bad input (unknown
scenario, schema violation, malformed flags, unreadable files).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .analysis import emit, run_analysis, run_verification, verify_suite
from .errors import PrequantumError, QuadratureNotConverged
from .scenarios import BUILTIN_ORDER, BUILTINS, load_scenario

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT_ERROR = 0, 1, 2
OUT_ENV = "PREQUANTUM_OUT"

log = logging.getLogger("prequantum")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def _grid(text: str) -> tuple[int, int]:
    try:
        s, n = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like S,N (two integers)") from None
    if s < 8 or n < 8:
        raise argparse.ArgumentTypeError("grid sizes must be at least 8")
    return s, n


def _tol(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("tolerance must be a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def _formats(text: str) -> tuple[str, ...]:
    items = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [p for p in items if p not in ("json", "csv")]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"unknown emit format(s): {', '.join(bad) or text!r}")
    return items


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prequantum", description="Prequantum groupoid computations on model spaces.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="analyze one scenario and write its report")
    a.add_argument("scenario", help="built-in scenario name or path to a scenario JSON file")
    a.add_argument("--grid", type=_grid, help="homotopy grid sizes S,N (default 256,256)")
    a.add_argument("--tol", type=_tol, help="acceptance tolerance (default 1e-6)")
    a.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or the current directory)")
    a.add_argument("--emit", type=_formats, default=("json",), help="comma list of json,csv (default json)")

    v = sub.add_parser("verify", help="run the verification suites")
    v.add_argument("--suite", default="paper", help="'paper' for every built-in scenario, or one scenario")
    v.add_argument("--grid", type=_grid)
    v.add_argument("--tol", type=_tol)
    v.add_argument("--out", type=Path, help="also write the verification report here")
    v.add_argument("--jobs", type=int, default=1, help="scenarios verified concurrently")

    sub.add_parser("list-scenarios", help="list the built-in scenarios")
    return p


def _out_dir(arg: Path | None) -> Path:
    if arg is not None:
        return arg
    return Path(os.environ.get(OUT_ENV) or ".")


def _print_checks(data: dict, indent: str = "") -> None:
    if "scenario" in data:
        print(f"{indent}{data['scenario']}: P_omega = {data['P_omega']['describe']}, T_omega = {data['T_omega']}")
    for c in data.get("checks", []):
        mark = "PASS" if c["pass"] else "FAIL"
        print(f"{indent}  [{mark}] {c['name']} (residual {c['residual']}, tol {c['tolerance']})")
    for sub in data.get("scenarios", []):
        _print_checks(sub, indent)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help; report the status instead of exiting
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list-scenarios":
            for name in BUILTIN_ORDER:
                print(f"{name}\t{BUILTINS[name].get('description', '')}")
            return EXIT_OK
        if args.command == "analyze":
            scn = load_scenario(args.scenario, grid=args.grid, tol=args.tol)
            report = run_analysis(scn)
            for path in emit(report, args.emit, _out_dir(args.out)):
                print(path)
            _print_checks(report.data)
        else:
            if args.jobs < 1:
                print("prequantum: error: --jobs must be positive", file=sys.stderr)
                return EXIT_INPUT_ERROR
            if args.suite == "paper":
                report = verify_suite(BUILTIN_ORDER, grid=args.grid, tol=args.tol, jobs=args.jobs)
            else:
                report = run_verification(load_scenario(args.suite, grid=args.grid, tol=args.tol))
            if args.out is not None:
                for path in emit(report, ("json",), args.out):
                    print(path)
            _print_checks(report.data)
    except QuadratureNotConverged as exc:
        # valid input, but the requested accuracy was not reached on this grid
        print(f"prequantum: check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (PrequantumError, OSError) as exc:
        print(f"prequantum: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    ok = report.passed
    print("all checks passed" if ok else "some checks FAILED")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
