"""Analytic vs central finite-difference gradient verification."""

import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from selfclassifier.core.loss import ViewKind, ViewLogits, multihead_loss
from selfclassifier.core.model import ModelParams, forward, init_params
from selfclassifier.core.ops import Mode
from selfclassifier.core.tensor import Graph, Tensor, backward
from selfclassifier.schemas.config import LossConfig, ModelConfig
from selfclassifier.schemas.report import GradCheckBlock, GradCheckReport
from selfclassifier.utils.seeding import stream

FD_STEP = 1e-4
ERROR_FLOOR = 1e-8


def numerical_gradient(fn: Callable[[], float], array: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """
    Central differences of a scalar function with respect to every entry of array.

    array is perturbed in place and restored after each entry.
    """
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + step
        upper = fn()
        array[index] = original - step
        lower = fn()
        array[index] = original
        grad[index] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max|a - n| scaled by the largest magnitude of either gradient."""
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), ERROR_FLOOR)
    return float(np.max(np.abs(analytic - numeric))) / scale


def gradient_errors(
    build: Callable[[Sequence[Tensor]], Tensor],
    tensors: Sequence[Tensor],
    step: float = FD_STEP,
) -> List[float]:
    """
    Relative error of the analytic gradient of a scalar graph for every input.

    Args:
        build: Maps the input tensors to a 1x1 tensor using differentiable ops
        tensors: Leaves with requires_grad set
        step: Finite-difference step

    Returns:
        One relative error per input tensor
    """
    for tensor in tensors:
        tensor.zero_grad()
    with Graph():
        backward(build(tensors))
    analytic = [tensor.grad.copy() for tensor in tensors]

    def value() -> float:
        return build(tensors).item()

    return [
        relative_error(grad, numerical_gradient(value, tensor.data, step))
        for tensor, grad in zip(tensors, analytic)
    ]


def toy_model_config() -> ModelConfig:
    """Model small enough for per-entry finite differences."""
    return ModelConfig(
        input_dim=4,
        encoder_layers=[6],
        proj_hidden=6,
        proj_hidden_layers=1,
        proj_out=4,
        head_sizes=[4, 8],
    )


def _pipeline_loss(
    params: ModelParams,
    views: Sequence[np.ndarray],
    kinds: Sequence[ViewKind],
    loss_cfg: LossConfig,
) -> Tensor:
    per_view = [forward(params, Tensor(view), Mode.TRAIN)[1] for view in views]
    per_head = [
        ViewLogits([heads[h] for heads in per_view], kinds) for h in range(len(params.config.head_sizes))
    ]
    cfgs = [loss_cfg.for_head(c) for c in params.config.head_sizes]
    return multihead_loss(per_head, cfgs)


def grad_check(
    tolerance: float = 1e-3,
    seed: int = 0,
    model_cfg: Optional[ModelConfig] = None,
    loss_cfg: Optional[LossConfig] = None,
    n_batch: int = 8,
    kinds: Sequence[ViewKind] = (ViewKind.GLOBAL, ViewKind.GLOBAL, ViewKind.LOCAL),
    step: float = FD_STEP,
) -> GradCheckReport:
    """
    Verify the full model + loss gradient, one block per named parameter.

    Batch norm runs in train mode, so its output depends only on the current
    batch and repeated forwards are consistent.

    Args:
        tolerance: Maximal accepted relative error; inf always passes
        seed: Seed for parameters and inputs
        model_cfg: Model to check; defaults to toy_model_config()
        loss_cfg: Loss settings; defaults to LossConfig()
        n_batch: Rows per view
        kinds: Kind of every view
        step: Finite-difference step

    Returns:
        GradCheckReport with the max relative error of each block
    """
    model_cfg = model_cfg or toy_model_config()
    loss_cfg = loss_cfg or LossConfig()
    params = init_params(model_cfg, seed)
    rng = stream(seed, "augment")
    views = [rng.standard_normal((n_batch, model_cfg.input_dim)) for _ in kinds]

    params.zero_grad()
    with Graph():
        backward(_pipeline_loss(params, views, kinds, loss_cfg))
    analytic: Dict[str, np.ndarray] = {name: tensor.grad.copy() for name, tensor in params}

    def value() -> float:
        return _pipeline_loss(params, views, kinds, loss_cfg).item()

    blocks = []
    for name, tensor in params:
        error = relative_error(analytic[name], numerical_gradient(value, tensor.data, step))
        passed = math.isinf(tolerance) or error < tolerance
        blocks.append(GradCheckBlock(name=name, size=tensor.data.size, max_rel_error=error, passed=passed))
        logger.debug(f"grad-check {name}: rel. error {error:.3e} ({'ok' if passed else 'FAIL'})")

    report = GradCheckReport(tolerance=tolerance, blocks=blocks)
    logger.info(
        f"grad-check: {len(blocks)} blocks, max rel. error {report.max_rel_error:.3e}, "
        f"{'passed' if report.passed else 'FAILED'}"
    )
    return report
