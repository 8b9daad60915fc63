"""eval: score a checkpoint on a labeled dataset."""

import argparse
from pathlib import Path

from selfclassifier.config import settings
from selfclassifier.services.evaluation import evaluate_checkpoint
from selfclassifier.services.metrics import Normalizer
from selfclassifier.services.reporting import metrics_frame
from selfclassifier.storage.datasets import read_dataset
from selfclassifier.storage.hierarchy import read_hierarchy


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="Evaluate a checkpoint")
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--data", required=True, help="Dataset CSV with ground-truth labels")
    parser.add_argument("--hierarchy", help="Hierarchy TSV (leaf, level, super)")
    parser.add_argument(
        "--knn-k", type=int, default=settings.KNN_K, help="K-NN probe neighbors; 0 skips the probe"
    )
    parser.add_argument("--knn-test-fraction", type=float, default=settings.KNN_TEST_FRACTION)
    parser.add_argument("--split-seed", type=int, default=settings.EVAL_SPLIT_SEED)
    parser.add_argument(
        "--nmi-normalizer", choices=[n.value for n in Normalizer], default=Normalizer.GEOMETRIC.value
    )
    parser.add_argument(
        "--ami-normalizer", choices=[n.value for n in Normalizer], default=Normalizer.ARITHMETIC.value
    )
    parser.add_argument("--out", help="Write metrics JSON here and the metrics CSV next to it")
    parser.set_defaults(handler=run, command_name="eval")


def run(args: argparse.Namespace) -> int:
    dataset = read_dataset(args.data)
    hierarchy = read_hierarchy(args.hierarchy) if args.hierarchy else None
    report = evaluate_checkpoint(
        args.checkpoint,
        dataset,
        hierarchy=hierarchy,
        knn_k=args.knn_k or None,
        knn_test_fraction=args.knn_test_fraction,
        split_seed=args.split_seed,
        nmi_normalizer=Normalizer(args.nmi_normalizer),
        ami_normalizer=Normalizer(args.ami_normalizer),
    )
    document = report.model_dump_json(indent=2)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(document, encoding="utf-8")
        metrics_frame(report).to_csv(out.with_suffix(".csv"), index=False, float_format="%.17g")
    print(document)
    return 0
