"""Command-line front end.

Usage:
    semrobust docs/models/chain.json --query edge:y->z --json report.json

Exit codes: 0 analysis completed (identified or not), 2 input error,
3 lattice budget exceeded, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import BudgetExceeded, InputError, NumericalFailure
from .identification import DEFAULT_BUDGET
from .modelio import dumps_report, load_model, render_text
from .robustness import AnalysisConfig, analyze
from .targets import parse_query

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_NUMERIC = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="semrobust",
        description="Robustness analysis of a path coefficient or total effect in a linear SEM.",
    )
    p.add_argument("model", type=Path, help="model JSON file (variables, directed, bidirected)")
    p.add_argument("--query", required=True, help="'edge:x->y' or 'te:x->z'")
    p.add_argument("--oracle", action="store_true", help="cross-check with the numeric Jacobian oracle")
    p.add_argument("--seed", type=int, default=0, help="seed for the oracle and probes (default 0)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="lattice node cap")
    p.add_argument("--json", type=Path, metavar="PATH", help="also write the JSON report here")
    p.add_argument("--max-z", type=int, default=None, help="cap on conditioning-set size")
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.budget <= 0:
            raise InputError("--budget must be positive")
        if args.max_z is not None and args.max_z < 0:
            raise InputError("--max-z must be non-negative")
        g = load_model(args.model)
        query = parse_query(args.query)
        query.validate(g)
        config = AnalysisConfig(budget=args.budget, max_z=args.max_z, oracle=args.oracle, seed=args.seed)
        report = analyze(g, query, config)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    sys.stdout.write(render_text(report))
    if args.json is not None:
        try:
            args.json.write_text(dumps_report(report), encoding="utf-8")
        except OSError as exc:
            print(f"input error: cannot write {args.json}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    return EXIT_OK


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
