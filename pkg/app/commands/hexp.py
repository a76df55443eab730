"""
``hexp SYSTEM``: tail entropy h*(2^-m) per resolution.
"""

import argparse
from pathlib import Path

from app.commands.common import add_run_options, emit, expect, run_config_from
from app.core.entropy import h_star_profile
from app.core.symbolic import Subshift
from app.store.files import FAN, load_spec
from app.utils.tables import PROFILE_COLUMNS, profile_rows, render


def run(args: argparse.Namespace) -> int:
    config = run_config_from(args)
    system = load_spec(args.system)
    if system != FAN:
        expect(system, (Subshift,), "a subshift or fan document")
    profile = h_star_profile(system, config.resolutions, args.n_max)
    emit(render(PROFILE_COLUMNS, profile_rows(profile)), args.out)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("hexp", help="tail entropy profile of a system")
    parser.add_argument("system", type=Path, help="subshift or fan document")
    add_run_options(parser)
    parser.set_defaults(handler=run)
