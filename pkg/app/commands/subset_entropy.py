"""
``subset-entropy SET``: growth tables of a set at each resolution.
"""

import argparse
import logging
from pathlib import Path

from app.commands.common import add_run_options, emit, run_config_from
from app.core.entropy import growth_estimate
from app.core.fan import FanSet
from app.core.subsets import StagedFamily, SubshiftSet
from app.core.symbolic import Subshift
from app.store.files import FAN, load_spec
from app.utils.tables import ESTIMATE_COLUMNS, GROWTH_COLUMNS, estimate_rows, growth_rows, render

logger = logging.getLogger(__name__)


def as_set(obj):
    """Systems stand for their whole space."""
    if isinstance(obj, Subshift):
        return SubshiftSet(obj)
    if obj == FAN:
        return FanSet.whole()
    return obj


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    K = as_set(load_spec(args.set))
    n_max = config.n_max
    if args.n_max is None and isinstance(K, StagedFamily) and K.stages:
        n_max = K.horizon
        logger.info("reading the staged family up to its horizon %d", n_max)
    estimates = [growth_estimate(K, m, n_max) for m in config.resolutions]
    for est in estimates:
        logger.info("m=%d: %.6f in [%.6f, %.6f] (%s)", est.m, est.value, est.lower, est.upper, est.tag)
    if args.summary:
        emit(render(ESTIMATE_COLUMNS, estimate_rows(estimates)), args.out)
    else:
        emit(render(GROWTH_COLUMNS, growth_rows(estimates)), args.out)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("subset-entropy", help="growth tables of a set")
    parser.add_argument("set", type=Path, help="set, subshift or fan document")
    parser.add_argument("--summary", action="store_true", help="one estimate row per resolution instead of the tables")
    add_run_options(parser)
    parser.set_defaults(handler=run)
