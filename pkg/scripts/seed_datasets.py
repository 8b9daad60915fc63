"""Write the standard mixture datasets and a two-level hierarchy map."""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from loguru import logger

from selfclassifier.services.data_synth import generate_mixture
from selfclassifier.services.metrics import HierarchyMap
from selfclassifier.storage.datasets import write_dataset
from selfclassifier.storage.hierarchy import write_hierarchy
from selfclassifier.utils.logging import setup_logging

DATA_DIR = Path("data")

# name -> generator arguments
DATASETS = {
    "mixture4": dict(seed=0, n_classes=4, dim=16, n_samples=2000, separation=10.0),
    "mixture8": dict(seed=1, n_classes=8, dim=16, n_samples=4000, separation=8.0),
    "mixture4_unbalanced": dict(seed=2, n_classes=4, dim=16, n_samples=2000, separation=10.0, balanced=False),
    "noise4": dict(seed=3, n_classes=4, dim=16, n_samples=2000, separation=0.0),
}


def main():
    setup_logging()
    DATA_DIR.mkdir(exist_ok=True)

    for name, kwargs in DATASETS.items():
        write_dataset(generate_mixture(**kwargs), DATA_DIR / f"{name}.csv")

    # mixture8 leaves grouped in pairs, then quadruples
    hierarchy = HierarchyMap(
        {
            "pairs": {leaf: leaf // 2 for leaf in range(8)},
            "quads": {leaf: leaf // 4 for leaf in range(8)},
        }
    )
    write_hierarchy(hierarchy, DATA_DIR / "mixture8_hierarchy.tsv")
    logger.info(f"Seeded {len(DATASETS)} datasets into {DATA_DIR}/")


if __name__ == "__main__":
    main()
