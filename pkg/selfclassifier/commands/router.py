"""Top-level parser aggregating every subcommand."""

import argparse

from selfclassifier import __version__
from selfclassifier.commands import evaluate, gen_data, grad_check, report, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selfclassifier",
        description="Self-Classifier: self-supervised classification without collapse",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Override LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Include all subcommands
    gen_data.register(subparsers)
    train.register(subparsers)
    evaluate.register(subparsers)
    grad_check.register(subparsers)
    report.register(subparsers)
    return parser
