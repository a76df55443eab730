"""
Shared fixtures and hypothesis strategies.
"""

import json

import numpy as np
import pytest
from hypothesis import strategies as st

from app.config import settings
from app.core.symbolic import BiInfinitePoint, Subshift


@pytest.fixture
def full2() -> Subshift:
    return Subshift.full(2)


@pytest.fixture
def golden() -> Subshift:
    return Subshift.golden_mean()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture(autouse=True)
def restore_settings():
    """The command line writes its overrides into the settings singleton."""
    with settings.scoped():
        yield


@pytest.fixture
def write_doc(tmp_path):
    def write(name: str, data: dict):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write


FULL2_DOC = {"kind": "subshift", "alphabet": 2}
GOLDEN_DOC = {"kind": "subshift", "alphabet": 2, "forbidden": ["11"], "name": "golden mean"}


def words(alphabet: int = 2, min_size: int = 1, max_size: int = 6):
    return st.lists(st.integers(0, alphabet - 1), min_size=min_size, max_size=max_size).map(tuple)


@st.composite
def points(draw, alphabet: int = 2) -> BiInfinitePoint:
    """Eventually periodic binary points with short periods and a short center."""
    return BiInfinitePoint(
        draw(words(alphabet, 1, 3)),
        draw(words(alphabet, 0, 5)),
        draw(words(alphabet, 1, 3)),
        draw(st.integers(-4, 4)),
    )
