"""grad-check: verify analytic gradients of the full pipeline."""

import argparse

from selfclassifier.exceptions import VerificationError
from selfclassifier.services.grad_check import grad_check


def register(subparsers) -> None:
    parser = subparsers.add_parser("grad-check", help="Compare analytic and finite-difference gradients")
    parser.add_argument("--tolerance", type=float, default=1e-3, help="Max relative error per block")
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=run, command_name="grad-check")


def run(args: argparse.Namespace) -> int:
    report = grad_check(tolerance=args.tolerance, seed=args.seed)
    for block in report.blocks:
        print(f"{block.name:<32} {block.size:>5} {block.max_rel_error:.3e} {'ok' if block.passed else 'FAIL'}")
    if not report.passed:
        failed = [block.name for block in report.blocks if not block.passed]
        raise VerificationError(f"{len(failed)} blocks above tolerance {args.tolerance}: {failed}")
    return 0
