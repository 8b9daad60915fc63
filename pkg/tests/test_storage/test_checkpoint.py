"""Tests for the binary checkpoint format."""

import numpy as np
import pytest

from selfclassifier.core.model import forward, init_params
from selfclassifier.core.ops import Mode
from selfclassifier.core.tensor import Tensor
from selfclassifier.exceptions import CheckpointError
from selfclassifier.storage.checkpoint import MAGIC, load_checkpoint, save_checkpoint


@pytest.fixture
def trained_like_params(tiny_model_config):
    """Parameters whose BN running stats have moved off their defaults."""
    params = init_params(tiny_model_config, seed=9)
    forward(params, Tensor(np.random.default_rng(0).standard_normal((16, 4)) * 3.0 + 1.0), Mode.TRAIN)
    return params


def test_round_trip_is_exact(trained_like_params, tmp_path):
    """Test that every parameter and running stat survives bit for bit."""
    path = save_checkpoint(trained_like_params, tmp_path / "model.ckpt")
    loaded = load_checkpoint(path)

    assert loaded.config == trained_like_params.config
    assert loaded.names() == trained_like_params.names()
    for name, tensor in trained_like_params:
        np.testing.assert_array_equal(loaded[name].data, tensor.data)
    for prefix, state in trained_like_params.bn_states.items():
        np.testing.assert_array_equal(loaded.bn_states[prefix].running_mean, state.running_mean)
        np.testing.assert_array_equal(loaded.bn_states[prefix].running_var, state.running_var)


def test_loaded_model_predicts_identically(trained_like_params, tmp_path):
    """Test eval-mode outputs before and after a round trip."""
    loaded = load_checkpoint(save_checkpoint(trained_like_params, tmp_path / "m.ckpt"))
    batch = Tensor(np.random.default_rng(1).standard_normal((5, 4)))
    expected = forward(trained_like_params, batch, Mode.EVAL)[1]
    actual = forward(loaded, batch, Mode.EVAL)[1]
    for a, b in zip(expected, actual):
        np.testing.assert_array_equal(a.data, b.data)


def test_bad_magic(tmp_path):
    """Test CheckpointError for a file that is not a checkpoint."""
    path = tmp_path / "bogus.ckpt"
    path.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_unknown_version(trained_like_params, tmp_path):
    """Test CheckpointError for a future format version."""
    path = save_checkpoint(trained_like_params, tmp_path / "m.ckpt")
    raw = bytearray(path.read_bytes())
    raw[len(MAGIC)] = 99
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_truncated_file(trained_like_params, tmp_path):
    """Test CheckpointError when the payload is cut short."""
    path = save_checkpoint(trained_like_params, tmp_path / "m.ckpt")
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_missing_file(tmp_path):
    """Test CheckpointError for a missing path."""
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.ckpt")
