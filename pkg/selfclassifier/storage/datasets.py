"""Dataset CSV and partition files via pandas."""

from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from loguru import logger

from selfclassifier.exceptions import ConfigurationError
from selfclassifier.services.data_synth import Dataset

LABEL_COLUMN = "label"
FLOAT_FORMAT = "%.17g"


def write_dataset(dataset: Dataset, path: str | Path) -> Path:
    """Write header f0..f{D-1},label and one row per point with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.points, columns=[f"f{i}" for i in range(dataset.dim)])
    frame[LABEL_COLUMN] = dataset.labels
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {dataset.size} points ({dataset.dim}-d, {dataset.n_classes} classes) to {path}")
    return path


def read_dataset(path: str | Path, n_classes: Optional[int] = None) -> Dataset:
    """
    Load a dataset CSV.

    Args:
        path: CSV with feature columns f0.. followed by a label column
        n_classes: Label-space size; defaults to max label + 1

    Raises:
        ConfigurationError: If the file is missing or malformed
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"dataset not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    if LABEL_COLUMN not in frame.columns:
        raise ConfigurationError(f"{path} has no '{LABEL_COLUMN}' column")
    features = [column for column in frame.columns if column != LABEL_COLUMN]
    expected = [f"f{i}" for i in range(len(features))]
    if features != expected:
        raise ConfigurationError(f"{path}: feature columns must be f0..f{len(features) - 1}")

    labels = frame[LABEL_COLUMN].to_numpy(dtype=np.int64)
    return Dataset(
        points=frame[features].to_numpy(dtype=np.float64),
        labels=labels,
        n_classes=n_classes if n_classes is not None else int(labels.max()) + 1,
    )


def read_partition(path: str | Path) -> np.ndarray:
    """Labels from a dataset-style CSV (label column) or a one-label-per-line text file."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"partition file not found: {path}")
    if path.suffix.lower() == ".csv":
        frame = pd.read_csv(path)
        if LABEL_COLUMN not in frame.columns:
            raise ConfigurationError(f"{path} has no '{LABEL_COLUMN}' column")
        return frame[LABEL_COLUMN].to_numpy(dtype=np.int64)
    series = pd.read_csv(path, header=None, names=[LABEL_COLUMN], skip_blank_lines=True)
    return series[LABEL_COLUMN].to_numpy(dtype=np.int64)
