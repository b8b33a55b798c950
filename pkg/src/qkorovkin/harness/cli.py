"""Command-line entry point: ``qkorovkin <subcommand> [options]``.

Exit status is 0 when every check passes, 1 on a failed check and 2 on a
configuration error. CSV goes to ``--out`` (report on stdout) or, without
``--out``, to stdout with the report on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Optional, Sequence

from .commands import COMMANDS, CommandResult, fmt
from .config import ConfigError, load_config

__all__ = ["main", "render_csv"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def render_csv(result: CommandResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    writer.writerows([fmt(v) for v in row] for row in result.rows)
    return buf.getvalue()


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkorovkin",
        description="Experiments for q-integral Kantorovich-type operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "verify-moments": "moments of order 0-2 against their closed-form bounds",
        "converge": "sup-grid error against the modulus-of-continuity rate bound",
        "counterexample": "auxiliary operator: no classical limit, Abel limit 0",
        "summability": "deferred weighted A-densities of the error sets",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", type=Path, help="TOML experiment file (overrides the preset)")
        p.add_argument("--out", type=Path, help="write CSV here instead of stdout")
        p.add_argument("--mass-tol", type=float, help="outer-series mass tolerance")
        p.add_argument("--p-max", type=int, help="largest outer-series degree")
        p.add_argument("--grid", type=int, help="number of uniform grid points on [0, 1]")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(
            args.command, args.config, mass_tol=args.mass_tol, p_max=args.p_max, grid=args.grid
        )
        result = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    table = render_csv(result)
    summary = f"{'PASS' if result.passed else 'FAIL'} {args.command}: {result.failures} failed check(s)"
    report = "\n".join([*result.lines, summary]) + "\n"
    if args.out is not None:
        args.out.write_text(table, encoding="utf-8")
        sys.stdout.write(report)
    else:
        sys.stdout.write(table)
        sys.stderr.write(report)
    return EXIT_OK if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
