"""Eval-mode inference and scoring of a model against ground-truth labels."""

from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger

from selfclassifier.config import settings
from selfclassifier.core.model import ModelParams, forward
from selfclassifier.core.ops import Mode
from selfclassifier.core.tensor import Tensor
from selfclassifier.exceptions import DimensionError, ParameterError
from selfclassifier.schemas.report import EvalReport, HeadMetrics
from selfclassifier.services.data_synth import Dataset
from selfclassifier.services.metrics import (
    HierarchyMap,
    Normalizer,
    cluster_scores,
    hierarchical_eval,
    knn_probe,
)
from selfclassifier.storage.checkpoint import load_checkpoint
from selfclassifier.utils.seeding import stream


def predict(params: ModelParams, points: np.ndarray):
    """Eval-mode embeddings and argmax class per head."""
    embedding, logits = forward(params, Tensor(points), Mode.EVAL)
    return embedding.data, [np.argmax(head.data, axis=1) for head in logits]


def split_indices(n: int, test_fraction: float, seed: int):
    """Seeded (train, test) index split with at least one item on each side."""
    if n < 2:
        raise ParameterError("need at least two samples to split")
    order = stream(seed, "eval_split").permutation(n)
    n_test = min(max(1, int(round(test_fraction * n))), n - 1)
    return order[n_test:], order[:n_test]


def evaluate(
    params: ModelParams,
    dataset: Dataset,
    hierarchy: Optional[HierarchyMap] = None,
    knn_k: Optional[int] = None,
    knn_test_fraction: Optional[float] = None,
    split_seed: Optional[int] = None,
    nmi_normalizer: Normalizer = Normalizer.GEOMETRIC,
    ami_normalizer: Normalizer = Normalizer.ARITHMETIC,
) -> EvalReport:
    """
    Score every head of a model on a labeled dataset.

    Inference runs in eval mode (batch-norm running stats, no augmentation).
    Each head predicts its argmax class; predictions are scored flat and,
    when a hierarchy is given, at every hierarchy level.

    Args:
        params: Model parameters
        dataset: Points with ground-truth leaf labels
        hierarchy: Optional leaf -> superclass map
        knn_k: Neighbors for the K-NN probe; None skips the probe
        knn_test_fraction: Held-out fraction for the probe
        split_seed: Seed of the probe's train/test split
        nmi_normalizer: Mean used by NMI
        ami_normalizer: Mean used by AMI

    Returns:
        EvalReport with one HeadMetrics per head

    Raises:
        DimensionError: If the data width differs from the model input
    """
    if dataset.dim != params.config.input_dim:
        raise DimensionError(f"data has {dataset.dim} features, model expects {params.config.input_dim}")

    embedding, predictions = predict(params, dataset.points)
    heads = []
    for h, (pred, classes) in enumerate(zip(predictions, params.config.head_sizes)):
        levels = []
        if hierarchy is not None:
            levels = hierarchical_eval(pred, dataset.labels, hierarchy, nmi_normalizer, ami_normalizer)
        heads.append(
            HeadMetrics(
                head=h,
                n_classes=classes,
                scores=cluster_scores(pred, dataset.labels, nmi_normalizer, ami_normalizer),
                levels=levels,
            )
        )

    knn_accuracy = None
    if knn_k is not None:
        fraction = settings.KNN_TEST_FRACTION if knn_test_fraction is None else knn_test_fraction
        seed = settings.EVAL_SPLIT_SEED if split_seed is None else split_seed
        train_idx, test_idx = split_indices(dataset.size, fraction, seed)
        knn_k = min(knn_k, train_idx.size)
        knn_accuracy = knn_probe(
            embedding[train_idx],
            dataset.labels[train_idx],
            embedding[test_idx],
            dataset.labels[test_idx],
            knn_k,
        )

    report = EvalReport(
        n_samples=dataset.size,
        base_head=params.config.base_head,
        heads=heads,
        knn_accuracy=knn_accuracy,
        knn_k=knn_k,
    )
    logger.debug(
        f"Evaluated {dataset.size} samples: base head ACC={report.base.scores.acc:.4f}"
        + (f", K-NN={knn_accuracy:.4f}" if knn_accuracy is not None else "")
    )
    return report


def evaluate_checkpoint(checkpoint_path: str | Path, dataset: Dataset, **kwargs) -> EvalReport:
    """Load a checkpoint and evaluate it; keyword arguments go to evaluate."""
    return evaluate(load_checkpoint(checkpoint_path), dataset, **kwargs)
