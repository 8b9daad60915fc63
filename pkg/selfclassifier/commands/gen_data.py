"""gen-data: write a Gaussian-mixture dataset CSV."""

import argparse

from loguru import logger

from selfclassifier.services.data_synth import generate_mixture
from selfclassifier.storage.datasets import write_dataset


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen-data", help="Generate a Gaussian-mixture dataset CSV")
    parser.add_argument("--out", required=True, help="Output CSV path")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--classes", type=int, default=4, help="True class count K")
    parser.add_argument("--dim", type=int, default=16, help="Feature dimension D")
    parser.add_argument("--samples", type=int, default=2000, help="Point count M")
    parser.add_argument("--separation", type=float, default=10.0, help="Distance of class means from the origin")
    parser.add_argument("--unbalanced", action="store_true", help="Draw class sizes from a Dirichlet")
    parser.set_defaults(handler=run, command_name="gen-data")


def run(args: argparse.Namespace) -> int:
    dataset = generate_mixture(
        args.seed, args.classes, args.dim, args.samples, args.separation, balanced=not args.unbalanced
    )
    path = write_dataset(dataset, args.out)
    logger.info(f"Dataset written to {path}")
    return 0
