"""Manually run the desk-scale experiment and its naive-loss control."""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from loguru import logger

from selfclassifier.config import settings
from selfclassifier.schemas.config import LossKind, RunConfig
from selfclassifier.services.reporting import write_run_outputs
from selfclassifier.services.trainer import train
from selfclassifier.utils.logging import setup_logging


def run(name: str, cfg: RunConfig) -> None:
    logger.info(f"Running {name} ({cfg.epochs} epochs, heads {cfg.model.head_sizes})...")
    result = train(cfg)
    write_run_outputs(result.report, result.params, cfg.output_dir)

    base = result.report.final.base
    logger.info(f"{name} complete in {result.report.wall_time_s:.1f}s")
    logger.info(f"Base head ACC: {base.scores.acc:.4f}  NMI: {base.scores.nmi:.4f}")
    logger.info(f"Final base-head entropy: {result.report.epochs[-1].entropy[base.head]:.4f}")
    if result.report.collapse_alarms:
        logger.warning(f"Collapse alarms at epochs {result.report.collapse_alarms}")


def main():
    """Train the desk preset, then the same run with the naive cross-entropy."""
    setup_logging()
    root = Path(settings.OUTPUT_DIR)

    try:
        run("self-classifier", RunConfig.desk_preset(output_dir=str(root / "desk")))
        run(
            "naive control",
            RunConfig.desk_preset(
                output_dir=str(root / "desk_naive"), kind=LossKind.NAIVE.value, head_sizes=[4]
            ),
        )
    except Exception as e:
        logger.error(f"Experiment failed: {e}")
        raise


if __name__ == "__main__":
    main()
