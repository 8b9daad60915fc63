"""Pytest configuration and fixtures."""

import numpy as np
import pytest
from loguru import logger

from selfclassifier.core.tensor import Tensor
from selfclassifier.schemas.config import (
    AugmentConfig,
    DataSourceConfig,
    LossConfig,
    ModelConfig,
    OptimConfig,
    RunConfig,
)
from selfclassifier.services.data_synth import generate_mixture


@pytest.fixture
def log_messages():
    """Collect loguru messages emitted during a test."""
    messages = []
    handler_id = logger.add(lambda message: messages.append(message.record), level="DEBUG")
    yield messages
    logger.remove(handler_id)


@pytest.fixture
def loss_cfg():
    """Default temperatures with no shape expectations."""
    return LossConfig()


@pytest.fixture
def equipartition_logits():
    """Factory: N x C logits assigning N/C samples to every class with gap `magnitude`."""

    def build(n: int = 8, c: int = 4, magnitude: float = 20.0) -> Tensor:
        logits = np.zeros((n, c))
        logits[np.arange(n), np.arange(n) % c] = magnitude
        return Tensor(logits, requires_grad=True)

    return build


@pytest.fixture
def collapsed_logits():
    """Factory: N x C logits with every sample in class 0."""

    def build(n: int = 8, c: int = 4, magnitude: float = 20.0) -> Tensor:
        logits = np.zeros((n, c))
        logits[:, 0] = magnitude
        return Tensor(logits, requires_grad=True)

    return build


@pytest.fixture
def tiny_model_config():
    """Small model over 4-d inputs with two heads."""
    return ModelConfig(
        input_dim=4,
        encoder_layers=[8],
        proj_hidden=8,
        proj_hidden_layers=1,
        proj_out=4,
        head_sizes=[4, 8],
    )


@pytest.fixture
def small_mixture():
    """Well-separated 4-class mixture, 200 points in 8-d."""
    return generate_mixture(seed=0, n_classes=4, dim=8, n_samples=200, separation=10.0)


@pytest.fixture
def quick_run_config(tmp_path):
    """A few-second training run on a small mixture."""
    return RunConfig(
        data=DataSourceConfig(data_classes=4, data_dim=8, data_samples=128, data_separation=10.0),
        model=ModelConfig(encoder_layers=[16], proj_hidden=16, proj_out=8, head_sizes=[4, 8]),
        loss=LossConfig(),
        optim=OptimConfig(warmup_epochs=1).scaled_for_batch(32),
        augment=AugmentConfig(queue_capacity=256, nn_warmup_epochs=1),
        batch_size=32,
        epochs=3,
        eval_every=1,
        seed=7,
        output_dir=str(tmp_path / "run"),
    )
