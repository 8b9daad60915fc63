"""Gaussian-mixture datasets and vector-space view augmentation."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from loguru import logger

from selfclassifier.core.loss import ViewKind
from selfclassifier.exceptions import DimensionError, ParameterError
from selfclassifier.schemas.config import AugmentConfig, DataSourceConfig
from selfclassifier.utils.validators import validate_labels

GENERATOR_VERSION = 1


@dataclass
class Dataset:
    """Labeled points plus the generator settings that produced them."""

    points: np.ndarray
    labels: np.ndarray
    n_classes: int
    seed: Optional[int] = None
    separation: Optional[float] = None
    covariance_scale: float = 1.0
    balanced: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2:
            raise DimensionError(f"points must be an M x D matrix, got shape {self.points.shape}")
        self.labels = validate_labels(self.labels)
        if self.labels.shape[0] != self.points.shape[0]:
            raise DimensionError(f"{self.points.shape[0]} points but {self.labels.shape[0]} labels")
        if self.labels.size and self.labels.max() >= self.n_classes:
            raise ParameterError(f"label {self.labels.max()} out of range for {self.n_classes} classes")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def generate_mixture(
    seed: int,
    n_classes: int,
    dim: int,
    n_samples: int,
    separation: float,
    balanced: bool = True,
) -> Dataset:
    """
    Sample an isotropic Gaussian mixture.

    Class means sit at separation times a random unit direction; points are
    mean plus standard normal noise. Balanced datasets give every class
    floor or ceil of M/K points in shuffled order.

    Args:
        seed: Generator seed; equal seeds give identical datasets
        n_classes: K_true >= 2
        dim: D >= 1
        n_samples: M >= K_true
        separation: Distance of every mean from the origin (>= 0)
        balanced: Equal class sizes when True, Dirichlet class weights otherwise

    Returns:
        Dataset with labels in [0, K_true)

    Raises:
        ParameterError: On invalid sizes
    """
    if n_classes < 2:
        raise ParameterError(f"need at least 2 classes, got {n_classes}")
    if dim < 1:
        raise ParameterError(f"dimension must be >= 1, got {dim}")
    if n_samples < n_classes:
        raise ParameterError(f"need at least one sample per class ({n_samples} < {n_classes})")
    if separation < 0:
        raise ParameterError(f"separation must be >= 0, got {separation}")

    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((n_classes, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    means = separation * directions

    if balanced:
        labels = rng.permutation(np.arange(n_samples) % n_classes)
    else:
        weights = rng.dirichlet(np.ones(n_classes))
        labels = rng.choice(n_classes, size=n_samples, p=weights)

    points = means[labels] + rng.standard_normal((n_samples, dim))
    logger.debug(f"Generated mixture: K={n_classes} D={dim} M={n_samples} separation={separation}")
    return Dataset(
        points=points,
        labels=labels,
        n_classes=n_classes,
        seed=seed,
        separation=separation,
        balanced=balanced,
        metadata={"generator_version": GENERATOR_VERSION},
    )


def generate_from_config(cfg: DataSourceConfig) -> Dataset:
    return generate_mixture(
        cfg.data_seed,
        cfg.data_classes,
        cfg.data_dim,
        cfg.data_samples,
        cfg.data_separation,
        cfg.data_balanced,
    )


def _kept_count(dim: int, keep_fraction: float) -> int:
    return max(1, int(round(keep_fraction * dim)))


def augment(
    point: np.ndarray,
    kind: ViewKind,
    seed: int,
    cfg: Optional[AugmentConfig] = None,
) -> np.ndarray:
    """
    One augmented view of a single point.

    Global views add sigma_global noise. Local views keep a random
    keep_fraction of coordinates, zero the rest, then add sigma_local noise.
    """
    cfg = cfg or AugmentConfig()
    rng = np.random.default_rng(seed)
    point = np.asarray(point, dtype=np.float64)
    return augment_batch(point.reshape(1, -1), kind, rng, cfg)[0]


def augment_batch(
    points: np.ndarray,
    kind: ViewKind,
    rng: np.random.Generator,
    cfg: AugmentConfig,
) -> np.ndarray:
    """Row-wise augment with every row drawing its own mask and noise."""
    kind = ViewKind(kind)
    n, dim = points.shape
    if kind is ViewKind.GLOBAL:
        return points + cfg.sigma_global * rng.standard_normal((n, dim))

    kept = _kept_count(dim, cfg.keep_fraction)
    view = points.copy()
    if kept < dim:
        # kept lowest-ranked coordinates per row survive
        ranks = np.argsort(rng.random((n, dim)), axis=1)
        view[np.arange(n)[:, None], ranks[:, kept:]] = 0.0
    return view + cfg.sigma_local * rng.standard_normal((n, dim))
