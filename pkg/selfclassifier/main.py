"""Command-line entry point."""

import sys
from typing import List, Optional

from selfclassifier.commands.router import build_parser
from selfclassifier.middleware.error_handling import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    handle_command_errors,
)
from selfclassifier.middleware.logging import log_command
from selfclassifier.utils.logging import setup_logging


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and run one subcommand.

    Returns:
        Exit code: 0 success, 1 config error, 2 runtime abort, 3 verification failure
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; those are configuration errors here
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG_ERROR
    setup_logging(args.log_level)
    command = handle_command_errors(log_command(args.command_name)(args.handler))
    return command(args)


if __name__ == "__main__":
    sys.exit(main())
