"""train: run config file -> checkpoint, report and CSV tables."""

import argparse
from typing import Dict, List

from loguru import logger

from selfclassifier.exceptions import ConfigurationError
from selfclassifier.schemas.config import RunConfig
from selfclassifier.services.reporting import write_run_outputs
from selfclassifier.services.trainer import train
from selfclassifier.storage.run_config import load_run_config, parse_flat


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="Train a Self-Classifier model")
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", help="Flat key = value run config file")
    source.add_argument("--preset", choices=["desk"], help="Built-in configuration")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one config key (repeatable)",
    )
    parser.add_argument("--output-dir", help="Directory for checkpoint and reports")
    parser.set_defaults(handler=run, command_name="train")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file or preset, with --set and --output-dir applied on top."""
    overrides: Dict[str, str] = parse_flat("\n".join(args.overrides), source="--set")
    if args.output_dir:
        overrides["output_dir"] = args.output_dir

    if args.config:
        base = load_run_config(args.config)
    elif args.preset == "desk":
        base = RunConfig.desk_preset()
    else:
        raise ConfigurationError("train needs --config or --preset")
    if not overrides:
        return base
    return RunConfig.from_flat({**base.to_flat(), **overrides})


def run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    result = train(cfg)
    paths = write_run_outputs(result.report, result.params, cfg.output_dir)

    base = result.report.final.base
    alarms: List[int] = result.report.collapse_alarms
    logger.info(
        f"Base head ({base.n_classes} classes): ACC={base.scores.acc:.4f} NMI={base.scores.nmi:.4f} "
        f"AMI={base.scores.ami:.4f} ARI={base.scores.ari:.4f}"
    )
    if alarms:
        logger.warning(f"Collapse alarm raised at epochs {alarms}")
    print(paths["report"])
    return 0
