"""
``lower SET --target h``: a subset of the set with one limit point and
entropy h, written as a document with its certificate.
"""

import argparse
import logging
from dataclasses import asdict
from pathlib import Path

from app.commands.common import add_run_options, dump_json, emit, run_config_from
from app.commands.subset_entropy import as_set
from app.core.entropy import reference_point
from app.core.errors import PreconditionError
from app.core.fan import FanSet
from app.core.lowering import PointSource, counterexample_partition, fan_lower, hul_lower, zero_entropy_infinite
from app.core.subsets import SubshiftSet
from app.store.files import dumps, load_spec, to_document

logger = logging.getLogger(__name__)


def _source(K, m: int) -> PointSource:
    if not isinstance(K, SubshiftSet):
        raise PreconditionError(f"--zero and --partition need a subshift, got a {type(K).__name__}")
    return PointSource(K.ambient, reference_point(K.ambient), m)


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    K = as_set(load_spec(args.set))
    m = config.resolutions[0]
    if args.partition:
        _, report = counterexample_partition(_source(K, m), args.target, config.estimate_tol)
        emit(dump_json({**asdict(report), "ok": report.ok}), args.out)
        return 0
    if args.zero:
        result = zero_entropy_infinite(_source(K, m), args.target)
    elif isinstance(K, FanSet):
        result = fan_lower(K, args.target, config.estimate_tol)
    else:
        result = hul_lower(K, args.target, K.ambient, m, config.estimate_tol)
    logger.info("lowered to a %s set", type(result).__name__)
    emit(dumps(to_document(result, config)), args.out)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("lower", help="lower a set to a target entropy")
    parser.add_argument("set", type=Path, help="set, subshift or fan document")
    parser.add_argument("--target", type=float, required=True, help="target entropy in nats")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--zero", action="store_true", help="build an infinite zero-entropy family, --target seeding its levels")
    mode.add_argument("--partition", action="store_true", help="report finite blocks whose union has entropy --target")
    add_run_options(parser)
    parser.set_defaults(handler=run)
