"""
Options shared by the verbs and their plumbing into the settings.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, List, Optional

from app.config import RunConfig, settings
from app.core.errors import SchemaError
from app.store.files import write_atomic


def parse_resolutions(text: str) -> List[int]:
    """``"2,3,4"`` or ``"1..6"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a resolution list: {text!r}")
    if not values or any(m < 1 for m in values):
        raise argparse.ArgumentTypeError(f"resolutions must be positive: {text!r}")
    return values


def add_run_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("run configuration")
    group.add_argument("--m", dest="resolutions", type=parse_resolutions, help="resolutions, e.g. 2,3,4 or 1..6")
    group.add_argument("--n-max", type=int, help="largest horizon")
    group.add_argument("--tol", dest="estimate_tol", type=float, help="tolerance for estimates and targets")
    group.add_argument("--seed", type=int, help="random seed")
    group.add_argument("--max-stages", type=int, help="stage budget of constructions")
    group.add_argument("--max-horizon", type=int, help="largest stage horizon searched")
    group.add_argument("--out", type=Path, help="write the result here instead of standard output")


def run_config_from(args: argparse.Namespace) -> RunConfig:
    """
    The RunConfig of this invocation. Command-line values also become the
    process settings for the rest of the command, so every computation
    below reads the same knobs; ``main`` restores them afterwards.
    """
    overrides = {
        "resolutions": getattr(args, "resolutions", None),
        "n_max": getattr(args, "n_max", None),
        "estimate_tol": getattr(args, "estimate_tol", None),
        "seed": getattr(args, "seed", None),
        "max_stages": getattr(args, "max_stages", None),
        "max_horizon": getattr(args, "max_horizon", None),
    }
    config = settings.run_config(**overrides)
    settings.RESOLUTIONS = list(config.resolutions)
    settings.N_MAX = config.n_max
    settings.ESTIMATE_TOL = config.estimate_tol
    settings.SEED = config.seed
    settings.MAX_STAGES = config.max_stages
    settings.MAX_HORIZON = config.max_horizon
    return config


def emit(text: str, out: Optional[Path]) -> None:
    """Write to ``out`` atomically, or to standard output."""
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        write_atomic(out, text)


def dump_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def expect(obj: Any, kinds: tuple, what: str) -> Any:
    if not isinstance(obj, kinds):
        raise SchemaError(f"expected {what}, got a {type(obj).__name__} document", "kind")
    return obj
