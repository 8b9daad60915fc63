"""Tests for seeded random streams and input validators."""

import numpy as np
import pytest

from selfclassifier.exceptions import DimensionError, ParameterError
from selfclassifier.utils.seeding import STREAM_PURPOSES, make_streams, stream
from selfclassifier.utils.validators import validate_labels, validate_unit_rows


def test_streams_are_reproducible_and_independent():
    """Test equal draws for equal seeds and distinct draws across purposes."""
    first = make_streams(5)
    second = make_streams(5)
    assert set(first) == set(STREAM_PURPOSES)
    draws = {purpose: first[purpose].random(4) for purpose in STREAM_PURPOSES}
    for purpose in STREAM_PURPOSES:
        np.testing.assert_array_equal(draws[purpose], second[purpose].random(4))
    assert not np.array_equal(draws["init"], draws["shuffle"])


def test_consuming_one_stream_leaves_others():
    """Test that extra augment draws do not move the shuffle order."""
    a = make_streams(1)
    b = make_streams(1)
    a["augment"].random(1000)
    np.testing.assert_array_equal(a["shuffle"].permutation(10), b["shuffle"].permutation(10))


def test_single_stream_lookup():
    """Test stream() against make_streams and unknown purposes."""
    np.testing.assert_array_equal(stream(3, "init").random(3), make_streams(3)["init"].random(3))
    with pytest.raises(KeyError):
        stream(3, "dropout")


def test_validators():
    """Test label and unit-row checks."""
    np.testing.assert_array_equal(validate_labels([1.0, 2.0]), [1, 2])
    with pytest.raises(ParameterError):
        validate_labels([0.5])
    with pytest.raises(DimensionError):
        validate_labels([[0, 1]])
    assert validate_unit_rows(np.eye(3))
    assert not validate_unit_rows(np.full((1, 2), 1.0))
