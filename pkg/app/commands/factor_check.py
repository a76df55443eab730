"""
``factor-check CODE``: fiber entropy of a sliding block code and the
sandwich inequalities on a set of its source.
"""

import argparse
import logging
from dataclasses import asdict
from pathlib import Path

from app.commands.common import add_run_options, dump_json, emit, expect, run_config_from
from app.commands.subset_entropy import as_set
from app.core.errors import PreconditionError
from app.core.factors import SlidingBlockCode, sandwich_check
from app.core.subsets import SubsetRep, SubshiftSet
from app.store.files import load_spec

logger = logging.getLogger(__name__)


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    code = expect(load_spec(args.code), (SlidingBlockCode,), "a code document")
    if args.set is None:
        E = SubshiftSet(code.source)
    else:
        E = expect(as_set(load_spec(args.set)), (SubsetRep,), "a set of the code's source")
        if E.ambient != code.source:
            raise PreconditionError(f"the set lives in {E.ambient.label}, the code reads {code.source.label}")
    report = sandwich_check(code, E, config.resolutions[0], config.n_max, config.estimate_tol)
    data = asdict(report)
    data.update(code=code.label, defect=report.defect, ok=report.ok, surjective=code.surjective)
    emit(dump_json(data), args.out)
    if not report.ok:
        logger.error("sandwich inequalities fail for %s", code.label)
        return 4
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("factor-check", help="sandwich report of a sliding block code")
    parser.add_argument("code", type=Path, help="code document")
    parser.add_argument("--set", type=Path, help="set of the source (default: the whole source)")
    add_run_options(parser)
    parser.set_defaults(handler=run)
