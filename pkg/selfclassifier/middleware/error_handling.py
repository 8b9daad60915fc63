"""Map exceptions raised by commands to process exit codes."""

from functools import wraps
from typing import Callable

from loguru import logger
from pydantic import ValidationError

from selfclassifier.exceptions import (
    CheckpointError,
    ConfigurationError,
    HierarchyError,
    NaNLossError,
    VerificationError,
)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2
EXIT_VERIFICATION_FAILED = 3


def exit_code_for(exc: BaseException) -> int:
    """
    Exit code of an exception escaping a command.

    Args:
        exc: Exception raised

    Returns:
        1 for configuration, file and input errors, 2 for aborted
        computations, 3 for failed verification
    """
    if isinstance(exc, VerificationError):
        return EXIT_VERIFICATION_FAILED
    if isinstance(exc, NaNLossError):
        return EXIT_RUNTIME_ERROR
    if isinstance(
        exc,
        (ConfigurationError, CheckpointError, HierarchyError, ValidationError, OSError, ValueError),
    ):
        return EXIT_CONFIG_ERROR
    return EXIT_RUNTIME_ERROR


def handle_command_errors(command: Callable[..., int]) -> Callable[..., int]:
    """Run a command and turn any exception into a logged message and exit code."""

    @wraps(command)
    def wrapper(*args, **kwargs) -> int:
        try:
            return command(*args, **kwargs)
        except VerificationError as e:
            logger.error(f"Verification failed: {e}")
            return EXIT_VERIFICATION_FAILED
        except NaNLossError as e:
            logger.error(f"Training aborted: {e}")
            return EXIT_RUNTIME_ERROR
        except Exception as e:
            code = exit_code_for(e)
            if code == EXIT_CONFIG_ERROR:
                logger.error(f"{type(e).__name__}: {e}")
            else:
                logger.exception(f"Unhandled exception: {e}")
            return code

    return wrapper
