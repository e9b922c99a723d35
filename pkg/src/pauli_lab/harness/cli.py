"""Command line entry point ``pauli-lab``.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure,
3 a check failed.
"""

from __future__ import annotations

import argparse
import csv
import sys

from .config import ConfigError, parse_config
from .pipeline import EXIT_CONFIG, EXIT_OK, clean_cache, run_pipeline


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pauli-lab", description="Low-lying Pauli spectra under strong magnetic fields.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in (
        ("run", "full sweep with CSV, JSON and figure output"),
        ("verify", "run the checks and write summary.json only"),
        ("constants", "compute the asymptotic constants only"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("config", help="YAML configuration file")
        s.add_argument("-o", "--output", help="output directory (overrides the config)")
        s.add_argument("--no-cache", action="store_true", help="do not read or write the cache")
        s.add_argument("--cache-dir", help="cache directory (default $PAULI_LAB_CACHE or ~/.cache/pauli_lab)")
    c = sub.add_parser("clean-cache", help="delete cached potentials and bases")
    c.add_argument("--cache-dir")
    return p


def _print_table(path) -> None:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(v.rjust(w) for v, w in zip(r, widths)))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "clean-cache":
        n = clean_cache(args.cache_dir)
        print(f"removed {n} cached file(s)")
        return EXIT_OK
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"pauli-lab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outcome = run_pipeline(cfg, args.command, output=args.output,
                           cache=False if args.no_cache else None, cache_override=args.cache_dir)
    if outcome.failed_stage:
        print(f"pauli-lab: numerical failure in stage {outcome.failed_stage}: "
              f"{outcome.summary.get('error')}", file=sys.stderr)
        return outcome.exit_code
    if args.command == "constants":
        _print_table(outcome.output / "predictions.csv")
    else:
        for chk in outcome.summary["checks"]:
            print(f"{'PASS' if chk['pass'] else 'FAIL'}  {chk['name']}")
    print(f"output: {outcome.output}")
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
