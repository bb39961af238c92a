"""Command-line entry point: ``inertia-lab run|suite|oracle``.

Exit status is 0 when every declared verdict holds, 1 when a verdict fails
or a run aborts, and 2 for unusable input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import ConfigurationError
from .config import load_config
from .runner import DEFAULT_OUT, OUT_ENV, default_out_dir, report_lines, run_scenario, run_suite
from .scenarios import SUITES

log = logging.getLogger("inertia_lab")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inertia-lab",
        description="Simulate inertial dynamics with vanishing damping and check convergence verdicts.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    out_help = f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})"

    p = sub.add_parser("run", help="run one scenario config (TOML or JSON)")
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, help=out_help)
    p.add_argument("--t-end", type=float, help="override the config's horizon")
    p.add_argument("--tol", type=float, help="override the solver's relative tolerance")

    p = sub.add_parser("suite", help=f"run a builtin suite ({', '.join(SUITES)}) or config files/directories")
    p.add_argument("items", nargs="*", metavar="name|path")
    p.add_argument("--workers", type=int, default=1, help="scenarios run in parallel processes (default: 1)")
    p.add_argument("--out", type=Path, help=out_help)

    p = sub.add_parser("oracle", help="run the closed-form cross-checks only")
    p.add_argument("--workers", type=int, default=1, help="scenarios run in parallel processes (default: 1)")
    p.add_argument("--out", type=Path, help=out_help)
    return parser


def _suite(items, workers, out) -> int:
    result = run_suite(items, workers=workers, out_dir=out)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for e in result.entries:
        if e.report is not None:
            print("\n".join(report_lines(e.report)))
        else:
            print(f"{e.name}: {e.status}: {e.error}")
    print(json.dumps(result.counts))
    return result.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = args.out if args.out is not None else default_out_dir()
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.t_end is not None or args.tol is not None:
                cfg = cfg.with_overrides(t_end=args.t_end, rel_tol=args.tol)
            report = run_scenario(cfg, out).report
            print("\n".join(report_lines(report)))
            return int(report.failed)
        if args.command == "suite":
            return _suite(args.items, args.workers, out)
        return _suite(["oracles"], args.workers, out)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
