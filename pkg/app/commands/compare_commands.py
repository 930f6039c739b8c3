import argparse

import pandas as pd

from app.services.experiment_service import compare_runs


def compare_command(args: argparse.Namespace) -> int:
    table = compare_runs(args.bundles)
    if args.csv:
        table.to_csv(args.csv, index=False, float_format="%.17g", na_rep="")
    with pd.option_context("display.max_columns", None, "display.width", 200):
        print(table.to_string(index=False))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("compare", help="tabulate final-time results across bundles")
    parser.add_argument("bundles", nargs="+", help="run bundle directories")
    parser.add_argument("--csv", help="also write the table to this CSV file")
    parser.set_defaults(handler=compare_command)
