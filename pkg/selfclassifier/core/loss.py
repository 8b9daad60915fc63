"""
Self-Classifier loss and its naive cross-entropy baseline.

Every function builds its result from the differentiable ops in
``selfclassifier.core.ops``, so calling it inside a ``Graph`` block records
the whole computation and gradients flow into both views. There is no
stop-gradient on the target branch.
"""

from enum import Enum
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from selfclassifier.core import ops
from selfclassifier.core.ops import Axis
from selfclassifier.core.tensor import Tensor
from selfclassifier.exceptions import ConfigurationError, DimensionError, ShapeError
from selfclassifier.schemas.config import LossConfig, LossKind


class ViewKind(str, Enum):
    """Crop scale of an augmented view."""

    GLOBAL = "global"
    LOCAL = "local"


class ViewLogits:
    """
    Logits of every augmented view of one batch for one head.

    Args:
        views: One N x C logits tensor per view
        kinds: ViewKind per view
        targets: Optional per-view replacement used only when the view plays
            the target role (nearest-neighbor substitution); None keeps the view

    Raises:
        DimensionError: If fewer than two views or shapes disagree
    """

    def __init__(
        self,
        views: Sequence[Tensor],
        kinds: Sequence[ViewKind],
        targets: Optional[Sequence[Optional[Tensor]]] = None,
    ):
        if len(views) < 2:
            raise DimensionError(f"need at least two views, got {len(views)}")
        if len(kinds) != len(views):
            raise DimensionError(f"{len(kinds)} view kinds for {len(views)} views")
        shape = views[0].shape
        for view in views[1:]:
            if view.shape != shape:
                raise DimensionError(f"view shapes differ: {shape} vs {view.shape}")
        if targets is None:
            targets = [None] * len(views)
        if len(targets) != len(views):
            raise DimensionError(f"{len(targets)} target overrides for {len(views)} views")
        for target in targets:
            if target is not None and target.shape != shape:
                raise DimensionError(f"target override shape {target.shape} differs from {shape}")

        self.views: List[Tensor] = list(views)
        self.kinds: List[ViewKind] = [ViewKind(kind) for kind in kinds]
        self.targets: List[Optional[Tensor]] = list(targets)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.views[0].shape

    def target_of(self, index: int) -> Tensor:
        """Logits used when view `index` provides the target."""
        override = self.targets[index]
        return self.views[index] if override is None else override

    def global_indices(self) -> List[int]:
        return [i for i, kind in enumerate(self.kinds) if kind is ViewKind.GLOBAL]

    def __len__(self):
        return len(self.views)


def _check_shape(s: Tensor, cfg: LossConfig) -> None:
    n, c = s.shape
    if cfg.n_batch is not None and n != cfg.n_batch:
        raise ShapeError(f"logits have {n} rows, config expects n_batch={cfg.n_batch}")
    if cfg.n_classes is not None and c != cfg.n_classes:
        raise ShapeError(f"logits have {c} columns, config expects n_classes={cfg.n_classes}")


def _prior_row(cfg: LossConfig, n_rows: int, factor: float) -> Optional[Tensor]:
    """Class prior broadcast to every row and multiplied by factor, or None when uniform."""
    if cfg.class_prior is None:
        return None
    prior = np.asarray(cfg.class_prior, dtype=np.float64).reshape(1, -1)
    return ops.constant(np.repeat(prior * factor, n_rows, axis=0))


# ============================================
# LOSS COMPONENTS
# ============================================


def target_distribution(s: Tensor, cfg: LossConfig) -> Tensor:
    """
    Column softmax at tau_col followed by a per-row L1 normalization.

    Each row sums to 1. With a class prior, the column softmax is reweighted
    by p(y) before the row normalization.
    """
    _check_shape(s, cfg)
    column_probs = ops.softmax_axis(s, Axis.COLS, cfg.tau_col)
    prior = _prior_row(cfg, s.rows, 1.0)
    if prior is not None:
        column_probs = ops.mul(column_probs, prior)
    return ops.l1_normalize_axis(column_probs, Axis.ROWS)


def log_prediction(s: Tensor, cfg: LossConfig) -> Tensor:
    """
    log(N/C * norm_cols(softmax_rows(s / tau_row))).

    N is the actual row count of s. Under a class prior the N/C factor
    becomes N * p(y).
    """
    _check_shape(s, cfg)
    n, c = s.shape
    row_probs = ops.softmax_axis(s, Axis.ROWS, cfg.tau_row)
    balanced = ops.l1_normalize_axis(row_probs, Axis.COLS)
    prior = _prior_row(cfg, n, float(n))
    if prior is None:
        scaled = ops.scale(balanced, n / c)
    else:
        scaled = ops.mul(balanced, prior)
    return ops.log(scaled)


def directional_loss(s1: Tensor, s2: Tensor, cfg: LossConfig) -> Tensor:
    """
    -(1/N) * sum(target_distribution(s2) * log_prediction(s1)).

    Args:
        s1: Logits of the predicting view
        s2: Logits of the target view
        cfg: Temperatures and expected shape

    Returns:
        1x1 loss tensor

    Raises:
        DimensionError: If the two views differ in shape
    """
    if s1.shape != s2.shape:
        raise DimensionError(f"views differ in shape: {s1.shape} vs {s2.shape}")
    weighted = ops.mul(target_distribution(s2, cfg), log_prediction(s1, cfg))
    return ops.scale(ops.reduce(weighted, "sum"), -1.0 / s1.rows)


def naive_loss(s1: Tensor, s2: Tensor, cfg: LossConfig) -> Tensor:
    """Plain cross-entropy between row softmaxes at tau_row; collapses when trained."""
    if s1.shape != s2.shape:
        raise DimensionError(f"views differ in shape: {s1.shape} vs {s2.shape}")
    _check_shape(s1, cfg)
    target = ops.softmax_axis(s2, Axis.ROWS, cfg.tau_row)
    log_pred = ops.log(ops.softmax_axis(s1, Axis.ROWS, cfg.tau_row))
    return ops.scale(ops.reduce(ops.mul(target, log_pred), "sum"), -1.0 / s1.rows)


def _pair_loss(s1: Tensor, s2: Tensor, cfg: LossConfig) -> Tensor:
    if cfg.kind is LossKind.NAIVE:
        return naive_loss(s1, s2, cfg)
    return directional_loss(s1, s2, cfg)


# ============================================
# AGGREGATION
# ============================================


def symmetric_loss(
    s1: Tensor,
    s2: Tensor,
    cfg: LossConfig,
    t1: Optional[Tensor] = None,
    t2: Optional[Tensor] = None,
) -> Tensor:
    """
    Average of both prediction directions.

    t1/t2 replace s1/s2 only where that view is the target.
    """
    forward = _pair_loss(s1, s2 if t2 is None else t2, cfg)
    reverse = _pair_loss(s2, s1 if t1 is None else t1, cfg)
    return ops.scale(ops.add(forward, reverse), 0.5)


def view_pairs(kinds: Sequence[ViewKind]) -> List[Tuple[int, int]]:
    """Unordered pairs (i, j), i < j, where at least one of the two views is global."""
    kinds = [ViewKind(kind) for kind in kinds]
    return [
        (i, j)
        for i, j in combinations(range(len(kinds)), 2)
        if kinds[i] is ViewKind.GLOBAL or kinds[j] is ViewKind.GLOBAL
    ]


def multiview_loss(views: ViewLogits, cfg: LossConfig) -> Tensor:
    """
    Mean symmetric loss over global-global and global-local view pairs.

    Raises:
        ConfigurationError: If no view is global
    """
    if not views.global_indices():
        raise ConfigurationError("multiview_loss needs at least one global view")
    pairs = view_pairs(views.kinds)
    total: Optional[Tensor] = None
    for i, j in pairs:
        pair = symmetric_loss(
            views.views[i], views.views[j], cfg, views.targets[i], views.targets[j]
        )
        total = pair if total is None else ops.add(total, pair)
    return ops.scale(total, 1.0 / len(pairs))


def multihead_loss(per_head_views: Sequence[ViewLogits], cfgs: Sequence[LossConfig]) -> Tensor:
    """
    Unweighted mean of multiview_loss over heads.

    Args:
        per_head_views: ViewLogits of every head
        cfgs: LossConfig per head, or a single config shared by all heads

    Raises:
        ConfigurationError: If there are no heads
    """
    if not per_head_views:
        raise ConfigurationError("multihead_loss needs at least one head")
    if len(cfgs) == 1 and len(per_head_views) > 1:
        cfgs = list(cfgs) * len(per_head_views)
    if len(cfgs) != len(per_head_views):
        raise ConfigurationError(f"{len(cfgs)} loss configs for {len(per_head_views)} heads")

    total: Optional[Tensor] = None
    for views, cfg in zip(per_head_views, cfgs):
        head = multiview_loss(views, cfg)
        total = head if total is None else ops.add(total, head)
    return ops.scale(total, 1.0 / len(per_head_views))
