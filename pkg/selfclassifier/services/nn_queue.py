"""FIFO memory of past embeddings for nearest-neighbor view substitution."""

import numpy as np
from loguru import logger

from selfclassifier.exceptions import DimensionError, ParameterError
from selfclassifier.utils.validators import validate_unit_rows


class NNQueue:
    """
    Ring buffer of unit-norm embeddings.

    Every slot remembers the global insertion index of its vector, so lookups
    can break similarity ties in insertion order after the ring wraps.
    """

    def __init__(self, capacity: int, dim: int):
        if capacity < 1:
            raise ParameterError(f"queue capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.dim = dim
        self._bank = np.zeros((capacity, dim))
        self._ids = np.full(capacity, -1, dtype=np.int64)
        self._cursor = 0
        self._inserted = 0

    def __len__(self):
        return min(self._inserted, self.capacity)

    @property
    def fill(self) -> float:
        """Fraction of capacity in use."""
        return len(self) / self.capacity

    def push(self, embeddings: np.ndarray) -> None:
        """
        Append rows in order, evicting the oldest once full.

        Raises:
            DimensionError: If the embedding width differs from the queue's
            ParameterError: If any row is not unit-norm within 1e-6
        """
        embeddings = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
        if embeddings.shape[1] != self.dim:
            raise DimensionError(f"queue stores {self.dim}-d vectors, got {embeddings.shape[1]}-d")
        if not validate_unit_rows(embeddings):
            raise ParameterError("queue only accepts unit-norm embeddings")
        for row in embeddings:
            self._bank[self._cursor] = row
            self._ids[self._cursor] = self._inserted
            self._cursor = (self._cursor + 1) % self.capacity
            self._inserted += 1

    def contents(self) -> np.ndarray:
        """Stored vectors, oldest first."""
        order = self._order()
        return self._bank[order].copy()

    def _order(self) -> np.ndarray:
        filled = np.flatnonzero(self._ids >= 0)
        return filled[np.argsort(self._ids[filled], kind="stable")]

    def lookup(self, queries: np.ndarray) -> np.ndarray:
        """
        Nearest stored vector (maximal dot product) for every query row.

        Ties go to the earliest inserted vector still in the queue. An empty
        queue returns the queries unchanged.
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if len(self) == 0:
            logger.warning("NN queue is empty; keeping the original views")
            return queries.copy()
        if queries.shape[1] != self.dim:
            raise DimensionError(f"queue stores {self.dim}-d vectors, got {queries.shape[1]}-d")
        stored = self._bank[self._order()]
        similarities = queries @ stored.T
        # argmax returns the first maximum, i.e. the lowest insertion index
        return stored[np.argmax(similarities, axis=1)].copy()


def nn_replace(queue: NNQueue, embedding: np.ndarray) -> np.ndarray:
    """Queue element most similar to one unit embedding, or the embedding itself when empty."""
    embedding = np.asarray(embedding, dtype=np.float64)
    return queue.lookup(embedding.reshape(1, -1))[0]
