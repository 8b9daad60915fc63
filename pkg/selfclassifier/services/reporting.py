"""Run artifacts: checkpoint, JSON report, timing file and CSV tables."""

import json
from pathlib import Path
from typing import Dict, Optional

import pandas as pd
from loguru import logger

from selfclassifier.config import settings
from selfclassifier.core.model import ModelParams
from selfclassifier.exceptions import ConfigurationError
from selfclassifier.schemas.report import EvalReport, RunReport
from selfclassifier.storage.checkpoint import save_checkpoint

FLOAT_FORMAT = "%.17g"


def epochs_frame(report: RunReport) -> pd.DataFrame:
    """One row per epoch: epoch, loss, lr, entropy_h*, acc_h* (blank when not evaluated)."""
    n_heads = len(report.final.heads)
    columns = (
        ["epoch", "loss", "lr"]
        + [f"entropy_h{h}" for h in range(n_heads)]
        + [f"acc_h{h}" for h in range(n_heads)]
    )
    rows = []
    for record in report.epochs:
        row = {"epoch": record.epoch, "loss": record.loss, "lr": record.lr}
        for h in range(n_heads):
            row[f"entropy_h{h}"] = record.entropy[h]
            row[f"acc_h{h}"] = record.acc[h] if record.acc is not None else None
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def metrics_frame(report: EvalReport) -> pd.DataFrame:
    """One row per (head, level); the flat scores use level 'leaf'."""
    rows = []
    for head in report.heads:
        entries = [("leaf", head.scores)] + [(level.level, level.scores) for level in head.levels]
        for level, scores in entries:
            rows.append(
                {
                    "head": head.head,
                    "n_classes": head.n_classes,
                    "level": level,
                    "base": head.head == report.base_head,
                    **scores.model_dump(),
                }
            )
    return pd.DataFrame(rows)


def write_report_tables(report: RunReport, output_dir: str | Path) -> Dict[str, Path]:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "epochs": output_dir / settings.EPOCH_CSV_NAME,
        "metrics": output_dir / settings.METRICS_CSV_NAME,
    }
    epochs_frame(report).to_csv(paths["epochs"], index=False, float_format=FLOAT_FORMAT)
    metrics_frame(report.final).to_csv(paths["metrics"], index=False, float_format=FLOAT_FORMAT)
    return paths


def write_run_outputs(
    report: RunReport, params: ModelParams, output_dir: Optional[str | Path] = None
) -> Dict[str, Path]:
    """
    Write every artifact of a finished run.

    report.json leaves out the wall time, which goes to the timing file, so
    identical runs produce identical reports.
    """
    output_dir = Path(output_dir or report.config.get("output_dir") or settings.OUTPUT_DIR)
    output_dir.mkdir(parents=True, exist_ok=True)

    paths = {"checkpoint": save_checkpoint(params, output_dir / settings.CHECKPOINT_NAME)}
    paths["report"] = output_dir / settings.REPORT_NAME
    paths["report"].write_text(report.model_dump_json(indent=2), encoding="utf-8")
    paths["timing"] = output_dir / settings.TIMING_NAME
    paths["timing"].write_text(json.dumps({"wall_time_s": report.wall_time_s}, indent=2), encoding="utf-8")
    paths.update(write_report_tables(report, output_dir))

    logger.info(f"Run artifacts written to {output_dir}")
    return paths


def load_report(path: str | Path) -> RunReport:
    """
    Read a report.json.

    Raises:
        ConfigurationError: If the file is missing or not a valid report
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"report not found: {path}")
    try:
        return RunReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValueError as e:
        raise ConfigurationError(f"{path} is not a valid run report: {e}") from e


def render_report(report_path: str | Path, output_dir: Optional[str | Path] = None) -> Dict[str, Path]:
    """Re-render the CSV tables of a saved report, next to it by default."""
    report_path = Path(report_path)
    report = load_report(report_path)
    return write_report_tables(report, output_dir or report_path.parent)
