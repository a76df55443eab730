"""
CSV tables written by the command line.

Columns are documented in docs/formats.md. Floats are written with repr so
that a table can be reproduced byte for byte.
"""

import csv
import io
import math
from typing import Iterable, List, Sequence, Tuple

from app.core.entropy import EntropyEstimate

GROWTH_COLUMNS = ["m", "n", "count", "log_count_per_n"]
ESTIMATE_COLUMNS = ["m", "n_max", "value", "lower", "upper", "tag"]
PROFILE_COLUMNS = ["m", "value", "lower", "upper", "tag", "horizon"]
BOUND_COLUMNS = ["stage", "length", "lower", "count", "upper", "between_checked", "between_ok"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def render(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return out.getvalue()


def growth_rows(estimates: Iterable[EntropyEstimate]) -> List[Tuple]:
    rows = []
    for est in estimates:
        for n, count in enumerate(est.counts, start=1):
            rows.append((est.m, n, count, math.log(count) / n if count > 0 else -math.inf))
    return rows


def estimate_rows(estimates: Iterable[EntropyEstimate]) -> List[Tuple]:
    return [(e.m, e.n_max, e.value, e.lower, e.upper, e.tag) for e in estimates]


def profile_rows(profile: Iterable[Tuple[int, EntropyEstimate]]) -> List[Tuple]:
    return [(m, e.value, e.lower, e.upper, e.tag, e.n_max) for m, e in profile]
