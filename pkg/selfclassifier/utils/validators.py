"""Custom validators for numeric inputs."""

from typing import Sequence

import numpy as np

from selfclassifier.exceptions import DimensionError, ParameterError


def validate_labels(labels: Sequence[int] | np.ndarray, name: str = "labels") -> np.ndarray:
    """
    Normalize a label sequence to a 1-D int64 array of non-negative ids.

    Args:
        labels: Label ids
        name: Name used in error messages

    Returns:
        1-D integer array

    Raises:
        ParameterError: If labels are negative or not integral
    """
    array = np.asarray(labels)
    if array.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {array.shape}")
    if array.size and not np.issubdtype(array.dtype, np.integer):
        if not np.all(np.equal(np.mod(array, 1), 0)):
            raise ParameterError(f"{name} must be integers")
    array = array.astype(np.int64)
    if array.size and array.min() < 0:
        raise ParameterError(f"{name} must be >= 0")
    return array


def validate_same_length(pred: np.ndarray, truth: np.ndarray) -> None:
    """Raise DimensionError when two partitions label different numbers of items."""
    if pred.shape[0] != truth.shape[0]:
        raise DimensionError(
            f"Partitions have different lengths: {pred.shape[0]} vs {truth.shape[0]}"
        )


def validate_unit_rows(vectors: np.ndarray, tol: float = 1e-6) -> bool:
    """
    Check that every row of a matrix has unit Euclidean norm.

    Args:
        vectors: 2-D array
        tol: Allowed deviation from 1

    Returns:
        True if all rows are unit-norm within tol
    """
    norms = np.linalg.norm(vectors, axis=1)
    return bool(np.all(np.abs(norms - 1.0) <= tol))
