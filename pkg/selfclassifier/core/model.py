"""Encoder MLP, projection head and bias-free linear classification heads."""

from typing import Dict, List, Optional, Tuple

import numpy as np

from selfclassifier.core import ops
from selfclassifier.core.ops import BatchNormState, Mode
from selfclassifier.core.tensor import Tensor
from selfclassifier.exceptions import ConfigurationError, DimensionError
from selfclassifier.schemas.config import HeadMode, ModelConfig
from selfclassifier.utils.seeding import stream


class ModelParams:
    """
    Named parameters in declaration order plus batch-norm running stats.

    Names follow ``<block>.<layer>.weight``, ``<block>.<layer>.bn.gamma`` and
    ``heads.<h>.weight``; head h has shape C_h x proj_out.
    """

    def __init__(self, config: ModelConfig):
        self.config = config
        self.tensors: Dict[str, Tensor] = {}
        self.bn_states: Dict[str, BatchNormState] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        tensor = Tensor(data, requires_grad=True, name=name)
        self.tensors[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors.items())

    def names(self) -> List[str]:
        return list(self.tensors)

    def head_names(self) -> List[str]:
        return [f"heads.{h}.weight" for h in range(len(self.config.head_sizes))]

    def bn_param_names(self) -> List[str]:
        return [name for name in self.tensors if ".bn." in name]

    def zero_grad(self) -> None:
        for tensor in self.tensors.values():
            tensor.zero_grad()

    def copy(self) -> "ModelParams":
        clone = ModelParams(self.config)
        for name, tensor in self.tensors.items():
            clone.add(name, tensor.data.copy())
        for name, state in self.bn_states.items():
            copied = BatchNormState(state.num_features)
            copied.running_mean = state.running_mean.copy()
            copied.running_var = state.running_var.copy()
            clone.bn_states[name] = copied
        return clone


def _linear_weight(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def _add_bn(params: ModelParams, prefix: str, width: int) -> None:
    params.add(f"{prefix}.bn.gamma", np.ones((1, width)))
    params.add(f"{prefix}.bn.beta", np.zeros((1, width)))
    params.bn_states[prefix] = BatchNormState(width)


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """
    Deterministically initialize every parameter from the seed's init stream.

    Linear weights are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], stored
    as (fan_out x fan_in); batch-norm gamma starts at 1 and beta at 0.

    Raises:
        ConfigurationError: If input_dim has not been resolved
    """
    if config.input_dim is None:
        raise ConfigurationError("model.input_dim is not set; resolve it from the dataset first")
    rng = stream(seed, "init")
    params = ModelParams(config)

    width = config.input_dim
    for i, out in enumerate(config.encoder_layers):
        params.add(f"encoder.{i}.weight", _linear_weight(rng, out, width))
        _add_bn(params, f"encoder.{i}", out)
        width = out

    for i in range(config.proj_hidden_layers):
        params.add(f"projection.{i}.weight", _linear_weight(rng, config.proj_hidden, width))
        _add_bn(params, f"projection.{i}", config.proj_hidden)
        width = config.proj_hidden
    params.add("projection.out.weight", _linear_weight(rng, config.proj_out, width))

    for h, classes in enumerate(config.head_sizes):
        params.add(f"heads.{h}.weight", _linear_weight(rng, classes, config.proj_out))
    return params


def _block(params: ModelParams, prefix: str, x: Tensor, mode: Mode) -> Tensor:
    cfg = params.config
    hidden = ops.matmul(x, params[f"{prefix}.weight"], transpose_b=True)
    normed = ops.batch_norm(
        hidden,
        params[f"{prefix}.bn.gamma"],
        params[f"{prefix}.bn.beta"],
        params.bn_states[prefix],
        mode=mode,
        eps=cfg.bn_eps,
        momentum=cfg.bn_momentum,
    )
    return ops.leaky_relu(normed, cfg.leaky_slope)


def embed(params: ModelParams, batch: Tensor, mode: Mode = Mode.TRAIN) -> Tensor:
    """Encoder and projection head; rows of the result have unit L2 norm."""
    cfg = params.config
    if batch.cols != cfg.input_dim:
        raise DimensionError(f"batch has {batch.cols} features, model expects {cfg.input_dim}")
    x = batch
    for i in range(len(cfg.encoder_layers)):
        x = _block(params, f"encoder.{i}", x, mode)
    for i in range(cfg.proj_hidden_layers):
        x = _block(params, f"projection.{i}", x, mode)
    x = ops.matmul(x, params["projection.out.weight"], transpose_b=True)
    return ops.l2_normalize_rows(x)


def head_logits(params: ModelParams, embedding: Tensor) -> List[Tensor]:
    """Logits embedding · W_hᵀ of every head."""
    return [ops.matmul(embedding, params[name], transpose_b=True) for name in params.head_names()]


def forward(
    params: ModelParams, batch: Tensor, mode: Mode = Mode.TRAIN
) -> Tuple[Tensor, List[Tensor]]:
    """
    Run the full network.

    Args:
        params: Model parameters
        batch: N x input_dim inputs
        mode: Mode.TRAIN uses and updates batch statistics

    Returns:
        (N x proj_out unit-norm embedding, one N x C_h logits tensor per head)

    Raises:
        BatchTooSmallError: If N < 2 in train mode
    """
    embedding = embed(params, batch, mode)
    return embedding, head_logits(params, embedding)


def trainable_parameters(params: ModelParams, head_mode: Optional[HeadMode] = None) -> Dict[str, Tensor]:
    """Parameters the optimizer updates; heads are left out in fixed mode."""
    mode = HeadMode(head_mode or params.config.head_mode)
    heads = set(params.head_names()) if mode is HeadMode.FIXED else set()
    return {name: tensor for name, tensor in params if name not in heads}


def parameter_count(tensors: Dict[str, Tensor]) -> int:
    return sum(tensor.data.size for tensor in tensors.values())
