"""
``verify [FILE]``: re-derive a stored document, or run the invariant suite.
"""

import argparse
import logging
from pathlib import Path

from app.commands.common import add_run_options, emit, run_config_from
from app.utils.tables import render
from app.utils.verify import SUITE, run_suite, verify_document

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["check", "ok", "detail"]


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    if args.file is not None:
        results = verify_document(args.file)
    else:
        results = run_suite(config, args.only)
    emit(render(RESULT_COLUMNS, [(r.name, r.ok, r.detail) for r in results]), args.out)
    failed = [r.name for r in results if not r.ok]
    if failed:
        logger.error("verification failed: %s", ", ".join(failed))
        return 4
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="check a document, or run the invariant suite")
    parser.add_argument("file", type=Path, nargs="?", help="document to re-derive (default: run the suite)")
    parser.add_argument("--only", nargs="+", choices=[name for name, _ in SUITE], help="suite checks to run")
    add_run_options(parser)
    parser.set_defaults(handler=run)
