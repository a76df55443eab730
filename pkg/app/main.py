"""
Command-line entry point.

Sets up logging and dispatches to the verbs registered by ``app.commands``.
Results go to standard output (or ``--out``), diagnostics to standard error.
"""

import argparse
import logging
import sys
from typing import List, Optional

from app import __version__
from app.commands import register_all
from app.config import settings
from app.core.errors import EntropyError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entropy-toolkit",
        description="Entropy of expansive symbolic systems and their subsets.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help=f"logging level (default {settings.LOG_LEVEL})")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    register_all(subparsers)
    return parser


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command.

    Returns:
        0 on success, 2 on schema errors, 3 on precondition violations and
        4 when a verification fails.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        with settings.scoped():
            return args.handler(args)
    except EntropyError as exc:
        logger.debug("%s failed", args.command, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
