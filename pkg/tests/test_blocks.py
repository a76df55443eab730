import itertools

import pytest
from hypothesis import given, settings as hsettings, strategies as st

from app.core.blocks import block_language
from app.core.errors import InadmissibleWord, PreconditionError
from app.core.symbolic import BiInfinitePoint, Subshift, WindowSpec, window_of

SYSTEMS = [Subshift.full(3), Subshift.golden_mean(), Subshift(2, frozenset({(1, 1, 1)}))]
X0 = BiInfinitePoint.constant(0)


@pytest.mark.parametrize("s", SYSTEMS, ids=lambda s: s.label)
@pytest.mark.parametrize("length", [1, 4, 7])
def test_blocks_are_listed_in_order(s, length):
    language = block_language(s)
    v = language.context(X0, -1)
    listed = list(language.blocks(v, length))
    assert listed == sorted(listed)
    assert len(listed) == len(set(listed)) == language.continuations(v, length)
    assert [language.rank(v, b) for b in listed] == list(range(len(listed)))


@pytest.mark.parametrize("s", SYSTEMS, ids=lambda s: s.label)
@hsettings(max_examples=60, deadline=None)
@given(data=st.data())
def test_unrank_inverts_rank(s, data):
    language = block_language(s)
    v = language.context(X0, -1)
    length = data.draw(st.integers(1, 10))
    r = data.draw(st.integers(0, language.continuations(v, length) - 1))
    block = language.unrank(v, length, r)
    assert len(block) == length
    assert language.rank(v, block) == r
    j = data.draw(st.integers(0, length))
    assert language.unrank(v, length, r, j) == block[:j]


@pytest.mark.parametrize("s", SYSTEMS, ids=lambda s: s.label)
@hsettings(max_examples=40, deadline=None)
@given(data=st.data())
def test_distinct_prefixes_matches_listing(s, data):
    language = block_language(s)
    v = language.context(X0, -1)
    length = data.draw(st.integers(1, 7))
    listed = list(language.blocks(v, length))
    first = data.draw(st.integers(0, len(listed)))
    j = data.draw(st.integers(0, length))
    expected = len({b[:j] for b in listed[:first]}) if first else 0
    assert language.distinct_prefixes(v, length, first, j) == expected


def test_golden_mean_counts():
    language = block_language(Subshift.golden_mean())
    v = language.context(X0, 0)
    assert [language.continuations(v, t) for t in range(1, 8)] == [2, 3, 5, 8, 13, 21, 34]
    with pytest.raises(InadmissibleWord):
        language.rank(v, (1, 1))
    with pytest.raises(PreconditionError):
        language.unrank(v, 3, 5)


def test_context_needs_an_essential_vertex():
    # nothing precedes a 1, so (1,) is not an essential vertex
    s = Subshift(2, frozenset({(0, 1), (1, 1)}))
    language = block_language(s)
    assert language.q == 1
    with pytest.raises(InadmissibleWord):
        language.context(BiInfinitePoint.constant(1), 0)


@pytest.mark.parametrize("s", SYSTEMS[1:], ids=lambda s: s.label)
def test_spliced_blocks_stay_admissible(s):
    language = block_language(s)
    v = language.context(X0, 1)
    for block in itertools.islice(language.blocks(v, 5), 12):
        end = language.end_vertex(v, block)
        tail = language.rejoin(end, X0, 6)
        point = language.point_through(X0, 2, block)
        assert s.is_admissible(point)
        assert window_of(point, WindowSpec(2, 6)) == block
        assert len(tail) <= 2


def test_point_through_the_golden_mean():
    s = Subshift.golden_mean()
    language = block_language(s)
    y = language.point_through(X0, 3, (1, 0, 1))
    assert window_of(y, WindowSpec(0, 8)) == (0, 0, 0, 1, 0, 1, 0, 0, 0)
