"""Command logging with timing."""

import time
from functools import wraps
from typing import Callable

from loguru import logger


def log_command(name: str) -> Callable[[Callable[..., int]], Callable[..., int]]:
    """
    Log the start, exit code and duration of a CLI command.

    Args:
        name: Command name shown in the log

    Returns:
        Decorator for a command returning an exit code
    """

    def decorator(command: Callable[..., int]) -> Callable[..., int]:
        @wraps(command)
        def wrapper(*args, **kwargs) -> int:
            start_time = time.perf_counter()
            logger.info(f"{name} started")

            code = command(*args, **kwargs)

            duration = time.perf_counter() - start_time
            logger.info(f"{name} finished - exit {code} - {duration:.3f}s")
            return code

        return wrapper

    return decorator
