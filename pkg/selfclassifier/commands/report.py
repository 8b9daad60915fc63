"""report: render a saved run report to CSV tables."""

import argparse

from selfclassifier.services.reporting import render_report


def register(subparsers) -> None:
    parser = subparsers.add_parser("report", help="Render report.json to epoch and metrics CSVs")
    parser.add_argument("--report", required=True, help="Path to report.json")
    parser.add_argument("--out", help="Output directory; defaults to the report's directory")
    parser.set_defaults(handler=run, command_name="report")


def run(args: argparse.Namespace) -> int:
    for path in render_report(args.report, args.out).values():
        print(path)
    return 0
