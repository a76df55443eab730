"""
``entropy SYSTEM``: topological entropy of a system document.
"""

import argparse
import logging
import math
from pathlib import Path

from app.commands.common import add_run_options, emit, expect, run_config_from
from app.core.entropy import sft_entropy_exact
from app.core.fan import BALL_ALPHABET
from app.core.symbolic import Subshift, higher_block
from app.store.files import FAN, load_spec

logger = logging.getLogger(__name__)


def system_entropy(system) -> float:
    """Exact entropy of a subshift, re-blocked to one step when needed; the fan has log 2."""
    if system == FAN:
        return math.log(BALL_ALPHABET)
    if not system.is_one_step:
        block = system.max_forbidden_len - 1
        logger.info("re-blocking %s to %d-blocks", system.label, block)
        system, _ = higher_block(system, block)
    return sft_entropy_exact(system)


def run(args: argparse.Namespace) -> int:
    run_config_from(args)
    system = load_spec(args.system)
    if system != FAN:
        expect(system, (Subshift,), "a subshift or fan document")
    value = system_entropy(system)
    emit(f"{value:.{args.digits}f}\n", args.out)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("entropy", help="exact topological entropy of a system")
    parser.add_argument("system", type=Path, help="subshift or fan document")
    parser.add_argument("--digits", type=int, default=6, help="decimals printed (default 6)")
    add_run_options(parser)
    parser.set_defaults(handler=run)
