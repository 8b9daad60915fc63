"""Tests for exception to exit-code mapping."""

from selfclassifier.exceptions import (
    CheckpointError,
    ConfigurationError,
    DegenerateSliceError,
    HierarchyError,
    NaNLossError,
    NonFiniteError,
    VerificationError,
)
from selfclassifier.middleware.error_handling import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_RUNTIME_ERROR,
    EXIT_VERIFICATION_FAILED,
    exit_code_for,
    handle_command_errors,
)


def test_exit_codes():
    """Test the code assigned to each error family."""
    assert exit_code_for(ConfigurationError("x")) == EXIT_CONFIG_ERROR
    assert exit_code_for(CheckpointError("x")) == EXIT_CONFIG_ERROR
    assert exit_code_for(HierarchyError("x")) == EXIT_CONFIG_ERROR
    assert exit_code_for(FileNotFoundError("x")) == EXIT_CONFIG_ERROR
    assert exit_code_for(NaNLossError("x")) == EXIT_RUNTIME_ERROR
    assert exit_code_for(NonFiniteError("x")) == EXIT_RUNTIME_ERROR
    assert exit_code_for(VerificationError("x")) == EXIT_VERIFICATION_FAILED
    assert exit_code_for(RuntimeError("x")) == EXIT_RUNTIME_ERROR


def test_handle_command_errors(log_messages):
    """Test that the wrapper returns codes and logs instead of raising."""

    def fails(error):
        raise error

    assert handle_command_errors(lambda: EXIT_OK)() == EXIT_OK
    assert handle_command_errors(fails)(DegenerateSliceError("dead class")) == EXIT_CONFIG_ERROR
    assert handle_command_errors(fails)(NaNLossError("nan")) == EXIT_RUNTIME_ERROR
    assert handle_command_errors(fails)(VerificationError("off")) == EXIT_VERIFICATION_FAILED
    assert any("Verification failed" in record["message"] for record in log_messages)
