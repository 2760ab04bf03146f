"""Command-line front end: run a scenario preset and export its results.

Exit status: 0 when every scenario property check passes, 1 when any
fails, 2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, SimConfig, parse_config
from .kernel import SimTimeout
from .scenarios import SCENARIOS, run_scenario


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nocsim",
        description="Cycle-stepped chiplet interconnect simulator",
    )
    p.add_argument("--config", metavar="PATH",
                   help="INI configuration file (defaults used if omitted)")
    p.add_argument("--scenario", required=True, choices=sorted(SCENARIOS),
                   help="scenario preset to run")
    p.add_argument("--out", metavar="DIR", default="out",
                   help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=int, metavar="N",
                   help="override the configured seed")
    p.add_argument("--max-cycles", type=int, metavar="N",
                   help="override the configured cycle limit")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--csv", action="store_const", dest="formats",
                     const=("csv",), help="write only the CSV report")
    fmt.add_argument("--json", action="store_const", dest="formats",
                     const=("json",), help="write only the JSON report")
    fmt.add_argument("--both", action="store_const", dest="formats",
                     const=("csv", "json"),
                     help="write both formats (default)")
    p.set_defaults(formats=("csv", "json"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config) if args.config else SimConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.max_cycles is not None:
            cfg.max_cycles = args.max_cycles
        cfg.validate()
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        report = run_scenario(args.scenario, cfg)
    except SimTimeout as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    written = report.write(args.out, args.formats)
    for path in written:
        print(f"wrote {path}")
    for check in report.checks:
        status = "PASS" if check.ok else "FAIL"
        detail = f" ({check.detail})" if check.detail else ""
        print(f"{status} {check.name}{detail}")
    return 0 if report.passed() else 1


if __name__ == "__main__":
    sys.exit(main())
