"""LARS with momentum and the warmup + cosine learning-rate schedule."""

import math
from typing import Dict, Iterable, Optional

import numpy as np

from selfclassifier.core.tensor import Tensor
from selfclassifier.exceptions import DimensionError, ParameterError
from selfclassifier.schemas.config import OptimConfig


def lr_at(cfg: OptimConfig, epoch_fraction: float) -> float:
    """
    Learning rate at a fractional epoch.

    Linear from warmup_start_lr to base_lr over [0, warmup_epochs], then a
    cosine decay from base_lr to final_lr that ends at total_epochs.

    Raises:
        ParameterError: If epoch_fraction is outside [0, total_epochs]
    """
    e = float(epoch_fraction)
    if not 0.0 <= e <= cfg.total_epochs:
        raise ParameterError(f"epoch {e} is outside [0, {cfg.total_epochs}]")

    if e < cfg.warmup_epochs:
        f = e / cfg.warmup_epochs
        return cfg.warmup_start_lr * (1.0 - f) + cfg.base_lr * f

    t = (e - cfg.warmup_epochs) / (cfg.total_epochs - cfg.warmup_epochs)
    w = (1.0 + math.cos(math.pi * t)) / 2.0
    # Convex combination: exact base_lr at t=0 and final_lr at t=1
    return cfg.final_lr * (1.0 - w) + cfg.base_lr * w


class OptimState:
    """Momentum buffers per parameter name and step counters."""

    def __init__(self):
        self.momentum: Dict[str, np.ndarray] = {}
        self.step = 0
        self.epoch = 0

    def buffer(self, name: str, shape) -> np.ndarray:
        buf = self.momentum.get(name)
        if buf is None:
            buf = np.zeros(shape)
            self.momentum[name] = buf
        elif buf.shape != tuple(shape):
            raise DimensionError(f"momentum buffer {name} has shape {buf.shape}, param {tuple(shape)}")
        return buf


def trust_ratio(param: np.ndarray, update: np.ndarray, eta: float, eps: float) -> float:
    """eta * ||param|| / (||update|| + eps), or 1 when either norm is zero."""
    param_norm = float(np.linalg.norm(param))
    update_norm = float(np.linalg.norm(update))
    if param_norm > 0.0 and update_norm > 0.0:
        return eta * param_norm / (update_norm + eps)
    return 1.0


def lars_step(
    params: Dict[str, Tensor],
    state: OptimState,
    cfg: OptimConfig,
    lr: float,
    grads: Optional[Dict[str, np.ndarray]] = None,
    exclude: Iterable[str] = (),
) -> None:
    """
    Apply one LARS update in place.

    Parameters named in exclude (batch-norm affine terms) skip weight decay
    and the trust ratio and get plain momentum SGD.

    Args:
        params: name -> parameter tensor to update
        state: Momentum buffers, created lazily
        cfg: Optimizer hyperparameters
        lr: Global learning rate for this step
        grads: name -> gradient; defaults to each tensor's .grad
        exclude: Names that bypass LARS scaling

    Raises:
        DimensionError: If a gradient's shape differs from its parameter's
    """
    excluded = set(exclude)
    for name, tensor in params.items():
        grad = tensor.grad if grads is None else grads[name]
        if grad is None:
            continue
        if grad.shape != tensor.data.shape:
            raise DimensionError(f"gradient of {name} has shape {grad.shape}, param {tensor.data.shape}")

        buf = state.buffer(name, tensor.data.shape)
        if name in excluded:
            buf *= cfg.momentum
            buf += grad
        else:
            update = grad + cfg.weight_decay * tensor.data
            local_lr = trust_ratio(tensor.data, update, cfg.lars_eta, cfg.lars_eps)
            buf *= cfg.momentum
            buf += local_lr * update
        if lr != 0.0:
            tensor.data -= lr * buf
    state.step += 1
