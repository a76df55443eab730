from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from app.core.entropy import growth_estimate, phi_set
from app.core.errors import PreconditionError
from app.core.fan import (
    APEX,
    BALL_SHIFT,
    FanPoint,
    FanSet,
    fan_apex_family,
    fan_distance,
    fan_separated_count,
)
from app.core.subsets import FinitePointSet, LeftFreeCylinder, SubshiftSet
from app.core.symbolic import BiInfinitePoint
from tests.conftest import points

ZERO = BiInfinitePoint.constant(0)


@st.composite
def fan_points(draw) -> FanPoint:
    if draw(st.booleans()):
        return APEX
    return FanPoint(draw(st.integers(1, 4)), draw(points()))


def test_fan_distance():
    one = BiInfinitePoint.parse("0.1.0")
    far = BiInfinitePoint.parse("0.1.0@2")
    assert fan_distance(APEX, APEX) == 0
    assert fan_distance(APEX, FanPoint(3, ZERO)) == Fraction(1, 8)
    assert fan_distance(FanPoint(2, ZERO), FanPoint(3, ZERO)) == Fraction(1, 4)
    assert fan_distance(FanPoint(2, ZERO), FanPoint(2, one)) == Fraction(1, 8)
    assert fan_distance(FanPoint(2, ZERO), FanPoint(2, far)) == Fraction(1, 32)


@given(fan_points(), fan_points(), fan_points())
def test_fan_distance_is_an_ultrametric(u, v, w):
    assert fan_distance(u, v) == fan_distance(v, u)
    assert fan_distance(u, w) <= max(fan_distance(u, v), fan_distance(v, w))
    assert (fan_distance(u, v) == 0) == (u == v)


def test_fan_points():
    with pytest.raises(PreconditionError):
        FanPoint(1)
    with pytest.raises(PreconditionError):
        FanPoint(0, ZERO)
    assert APEX.step(5) is APEX
    moved = FanPoint(2, BiInfinitePoint.parse("0.1.0")).step()
    assert moved.ball == 2 and moved.point.symbol_at(-1) == 1


def test_separated_counts_of_the_whole_fan():
    whole = FanSet.whole()
    assert fan_separated_count(whole, 1, 1) == 1
    # apex class, the two halves of ball 1, ball 2 as one class
    assert fan_separated_count(whole, 1, 3) == 4
    assert fan_separated_count(whole, 3, 3) == 1 + 2 ** 3 + 1
    with pytest.raises(PreconditionError):
        fan_separated_count(whole, 0, 3)


def test_parts_and_tails():
    K = FanSet(apex=False, parts={2: SubshiftSet(BALL_SHIFT)})
    assert K.part(1) is None and K.part(2) == SubshiftSet(BALL_SHIFT)
    assert K.has_tail(2) and not K.has_tail(3)
    assert list(K.balls()) == [2]
    assert FanSet.whole().part(7) == SubshiftSet(BALL_SHIFT)
    with pytest.raises(PreconditionError):
        FanSet(parts={0: SubshiftSet(BALL_SHIFT)})


def test_phi_sets_on_the_fan():
    at_apex = phi_set(APEX, 3, "fan")
    assert at_apex.apex and at_apex.full_from == 3
    x = FanPoint(2, ZERO)
    assert phi_set(x, 2, "fan").full_from == 2
    whole_ball = phi_set(x, 3, "fan")
    assert not whole_ball.apex and whole_ball.parts == {2: SubshiftSet(BALL_SHIFT)}
    cylinder = phi_set(x, 5, "fan").parts[2]
    assert isinstance(cylinder, LeftFreeCylinder)
    assert cylinder.fixed_from == -1


def test_apex_family():
    three = FinitePointSet(frozenset({ZERO, BiInfinitePoint.constant(1), BiInfinitePoint.periodic((0, 1))}), BALL_SHIFT)
    family = fan_apex_family({n: three for n in range(1, 9)})
    assert family.apex and list(family.balls()) == list(range(1, 9))
    # a countable set converging to the apex carries no entropy at any resolution
    for m in range(1, 7):
        counts = [fan_separated_count(family, n, m) for n in range(1, 25)]
        assert max(counts) <= 1 + 3 * (m - 1)
        assert growth_estimate(family, m, 24).value <= 0.05
    with pytest.raises(PreconditionError):
        fan_apex_family({1: SubshiftSet(BALL_SHIFT)})
