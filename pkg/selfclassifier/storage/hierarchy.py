"""Hierarchy map TSV: header leaf<TAB>level<TAB>super, one row per (leaf, level)."""

from pathlib import Path
from typing import Dict

import pandas as pd

from selfclassifier.exceptions import HierarchyError
from selfclassifier.services.metrics import HierarchyMap

COLUMNS = ["leaf", "level", "super"]


def read_hierarchy(path: str | Path) -> HierarchyMap:
    """
    Load a hierarchy map; levels keep their first-appearance order.

    Raises:
        HierarchyError: On a missing file, wrong header or duplicate rows
    """
    path = Path(path)
    if not path.exists():
        raise HierarchyError(f"hierarchy file not found: {path}")
    frame = pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False)
    if list(frame.columns) != COLUMNS:
        raise HierarchyError(f"{path}: header must be {'<TAB>'.join(COLUMNS)}")
    try:
        frame["leaf"] = frame["leaf"].astype("int64")
        frame["super"] = frame["super"].astype("int64")
    except ValueError as e:
        raise HierarchyError(f"{path}: leaf and super must be integers") from e
    duplicated = frame.duplicated(subset=["leaf", "level"])
    if duplicated.any():
        row = frame[duplicated].iloc[0]
        raise HierarchyError(f"leaf {row['leaf']} is mapped twice at level {row['level']!r}")

    levels: Dict[str, Dict[int, int]] = {}
    for level in pd.unique(frame["level"]):
        rows = frame[frame["level"] == level]
        levels[str(level)] = {int(leaf): int(sup) for leaf, sup in zip(rows["leaf"], rows["super"])}
    return HierarchyMap(levels)


def write_hierarchy(hierarchy: HierarchyMap, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        {"leaf": leaf, "level": level, "super": sup}
        for level, mapping in hierarchy.levels.items()
        for leaf, sup in mapping.items()
    ]
    pd.DataFrame(rows, columns=COLUMNS).to_csv(path, sep="\t", index=False)
    return path
