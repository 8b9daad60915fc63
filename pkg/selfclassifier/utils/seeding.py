"""Seeded random streams, one per purpose."""

from typing import Dict

import numpy as np

STREAM_PURPOSES = ("init", "shuffle", "augment", "eval_split")


def make_streams(seed: int) -> Dict[str, np.random.Generator]:
    """
    Split one seed into independent generators keyed by purpose.

    Consuming draws from one stream never shifts another, so e.g. changing the
    number of views leaves the shuffle order untouched.

    Args:
        seed: Master seed

    Returns:
        Mapping purpose -> numpy Generator
    """
    children = np.random.SeedSequence(seed).spawn(len(STREAM_PURPOSES))
    return {
        purpose: np.random.default_rng(child)
        for purpose, child in zip(STREAM_PURPOSES, children)
    }


def stream(seed: int, purpose: str) -> np.random.Generator:
    """Return the generator for a single purpose of a master seed."""
    if purpose not in STREAM_PURPOSES:
        raise KeyError(f"Unknown random stream purpose: {purpose}")
    return make_streams(seed)[purpose]
