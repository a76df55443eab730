import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from app.core.errors import InadmissibleWord, UncertifiedTail, WindowExceedsDepth
from app.core.subsets import (
    BlockStage,
    CylinderTree,
    FinitePointSet,
    Stage,
    StagedFamily,
    SubshiftSet,
    census,
    outer_tree,
    random_finite_set,
    random_tree,
    shift_set,
    validate_staged,
)
from app.core.symbolic import BiInfinitePoint, Subshift, WindowSpec, window_of

X0 = BiInfinitePoint.constant(0)


def block_family(ambient, open_tail=False):
    return StagedFamily(X0, 2, (BlockStage(1, -1, 1, 5), BlockStage(4, 3, 4, 3)), ambient, open_tail=open_tail)


def listed_copy(F):
    return StagedFamily(F.limit, F.resolution, tuple(Stage(s.length, F.stage_points(s)) for s in F.stages), F.ambient)


def test_block_stage_points(full2):
    F = block_family(full2)
    first = F.stage_points(F.stages[0])
    blocks = sorted(window_of(p, WindowSpec(-1, 1)) for p in first)
    assert blocks == [(0, 0, 1), (0, 1, 0), (0, 1, 1), (1, 0, 0), (1, 0, 1)]
    assert all(window_of(p, WindowSpec(-5, -2)) == (0, 0, 0, 0) for p in first)
    assert F.size == 8
    assert len(F.all_points()) == 9


@pytest.mark.parametrize("ambient", [Subshift.full(2), Subshift.golden_mean()])
@given(lo=st.integers(-3, 7), width=st.integers(0, 6))
@hsettings(max_examples=80, deadline=None)
def test_block_census_matches_listing(ambient, lo, width):
    F = StagedFamily(X0, 2, (BlockStage(1, -1, 1, 3), BlockStage(4, 3, 4, 2)), ambient)
    hi = min(lo + width, 5)
    if hi < lo:
        return
    w = WindowSpec(lo, hi)
    assert F.window_count(w) == listed_copy(F).window_count(w)


def test_block_family_validates(full2):
    F = block_family(full2)
    report = validate_staged(F)
    assert report.ok, report.failure
    assert report.checked == ["monotone", "admissible", "certificate", "separated"]
    assert validate_staged(listed_copy(F)).ok


def test_validation_reports_broken_certificates(full2):
    inside = StagedFamily(X0, 2, (BlockStage(1, -1, 1, 5), BlockStage(4, 2, 4, 3)), full2)
    report = validate_staged(inside)
    assert not report.ok and report.stage == 2
    too_many = StagedFamily(X0, 2, (BlockStage(1, -1, 1, 8),), full2)
    assert not validate_staged(too_many).ok
    unordered = StagedFamily(X0, 2, (BlockStage(4, 3, 4, 1), BlockStage(1, -1, 1, 1)), full2)
    assert validate_staged(unordered).failure.startswith("stage lengths")
    with_limit = StagedFamily(X0, 2, (Stage(1, frozenset({X0})),), full2)
    assert not validate_staged(with_limit).ok


def test_open_tail_refuses_uncertified_windows(full2):
    F = block_family(full2, open_tail=True)
    assert census(F, WindowSpec(-2, 5)).count >= 1
    with pytest.raises(UncertifiedTail):
        F.window_count(WindowSpec(0, 6))


def test_census_cuts_off_invisible_stages(full2):
    F = block_family(full2)
    # inside the first ball window only stage 1 can differ from x0
    assert F.visible_stages(WindowSpec(-2, 2)) == 1
    assert census(F, WindowSpec(-1, 1)).count == 6


def test_tree_windows(full2):
    tree = CylinderTree(2, 3, frozenset({(0, 1, 0), (1, 1, 1)}), full2)
    assert tree.span == WindowSpec(2, 4)
    assert census(tree, WindowSpec(3, 4), witnesses=True).witnesses == ((1, 0), (1, 1))
    with pytest.raises(WindowExceedsDepth):
        tree.window_count(WindowSpec(1, 3))


def test_tree_words_must_occur(golden):
    with pytest.raises(InadmissibleWord):
        CylinderTree(0, 2, frozenset({(1, 1)}), golden)


def test_shift_set_moves_windows(full2, rng):
    tree = random_tree(full2, 6, rng)
    moved = shift_set(tree, 2)
    assert moved.base == -2
    for lo in range(0, 4):
        w = WindowSpec(lo, lo + 2)
        assert moved.window_words(w.shifted(-2)) == tree.window_words(w)
    K = random_finite_set(full2, 4, rng)
    shifted = shift_set(K, -3)
    assert census(shifted, WindowSpec(3, 8)).count == census(K, WindowSpec(0, 5)).count
    F = block_family(full2)
    assert shift_set(F, 1).window_count(WindowSpec(-2, 0)) == F.window_count(WindowSpec(-1, 1))
    assert shift_set(SubshiftSet(full2), 5) == SubshiftSet(full2)


def test_outer_tree_keeps_the_census(golden):
    whole = SubshiftSet(golden)
    tree = outer_tree(whole, 6)
    for n in range(1, 7):
        assert tree.prefix_count(n) == golden.language_count(n)


def test_random_generators_are_seeded(full2):
    a = random_tree(full2, 8, np.random.default_rng(7))
    b = random_tree(full2, 8, np.random.default_rng(7))
    assert a == b
    assert all(len(w) == 8 for w in a.words)
    K = random_finite_set(Subshift.golden_mean(), 6, np.random.default_rng(3))
    assert all(K.ambient.is_admissible(p) for p in K.points)
    assert isinstance(K, FinitePointSet)
