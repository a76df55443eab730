"""
``dim-entropy TREE``: the h^B bracket of a cylinder tree.
"""

import argparse
from dataclasses import asdict
from pathlib import Path

from app.commands.common import add_run_options, dump_json, emit, expect, run_config_from
from app.core.dimensional import bridge_check, hB_bisect
from app.core.subsets import CylinderTree
from app.store.files import load_spec


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    tree = expect(load_spec(args.tree), (CylinderTree,), "a tree document")
    result = asdict(hB_bisect(tree, args.lambda_tol or config.lambda_tol))
    if args.bridge:
        result["bridge"] = asdict(bridge_check(tree))
    emit(dump_json(result), args.out)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("dim-entropy", help="dimensional entropy bracket of a cylinder tree")
    parser.add_argument("tree", type=Path, help="tree document")
    parser.add_argument("--lambda-tol", type=float, help="bisection width")
    parser.add_argument("--bridge", action="store_true", help="also compare with cover and separated slopes")
    add_run_options(parser)
    parser.set_defaults(handler=run)
