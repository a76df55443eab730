"""
The fan: countably many copies of the full 2-shift shrinking to a fixed apex.

Ball n is a copy of {0,1}^Z at distance 2^-n from the apex, with its own
shift metric scaled by 2^(-n-1). Distances between different balls are the
larger of their apex distances, which makes the whole space an ultrametric
and reduces (n, 2^-m)-separation to shift-space windows inside the balls
with index below m.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Optional

from app.core.errors import PreconditionError
from app.core.subsets import LeftFreeCylinder, SubsetRep, SubshiftSet
from app.core.symbolic import BiInfinitePoint, Subshift, separation_window, shift_by, shift_distance

logger = logging.getLogger(__name__)

BALL_ALPHABET = 2
BALL_SHIFT = Subshift.full(BALL_ALPHABET)


@dataclass(frozen=True)
class FanPoint:
    """The apex when ``ball`` is None, otherwise ``point`` inside ball ``ball``."""

    ball: Optional[int] = None
    point: Optional[BiInfinitePoint] = None

    def __post_init__(self):
        if (self.ball is None) != (self.point is None):
            raise PreconditionError("a fan point is either the apex or a (ball, point) pair")
        if self.ball is not None and self.ball < 1:
            raise PreconditionError("fan balls are indexed from 1")

    @property
    def is_apex(self) -> bool:
        return self.ball is None

    def step(self, t: int = 1) -> "FanPoint":
        """The fan map: shift inside a ball, the apex is fixed."""
        if self.is_apex:
            return self
        return FanPoint(self.ball, shift_by(self.point, t))


APEX = FanPoint()


def ball_radius(n: int) -> Fraction:
    return Fraction(1, 2 ** n)


def fan_distance(u: FanPoint, v: FanPoint) -> Fraction:
    if u.is_apex and v.is_apex:
        return Fraction(0)
    if u.is_apex or v.is_apex:
        return ball_radius(v.ball if u.is_apex else u.ball)
    if u.ball != v.ball:
        return max(ball_radius(u.ball), ball_radius(v.ball))
    return ball_radius(u.ball + 1) * shift_distance(u.point, v.point)


@dataclass(frozen=True)
class FanSet:
    """
    A compact subset of the fan.

    ``parts`` maps a ball index to a subset of the full 2-shift inside that
    ball. Every ball with index >= ``full_from`` carries ``tail``, the whole
    ball when ``tail`` is None.
    """

    apex: bool = True
    parts: Dict[int, SubsetRep] = field(default_factory=dict)
    full_from: Optional[int] = None
    tail: Optional[SubsetRep] = None

    def __post_init__(self):
        for n, part in self.parts.items():
            if n < 1:
                raise PreconditionError("fan balls are indexed from 1")
            if part.ambient != BALL_SHIFT:
                raise PreconditionError(f"ball {n} must live in the full 2-shift")
        if self.tail is not None and self.tail.ambient != BALL_SHIFT:
            raise PreconditionError("the tail part must live in the full 2-shift")
        if self.full_from is not None and self.full_from < 1:
            raise PreconditionError("full_from must be a ball index")

    def __hash__(self):
        return hash((self.apex, tuple(sorted(self.parts)), self.full_from, self.tail))

    @classmethod
    def whole(cls) -> "FanSet":
        return cls(apex=True, parts={}, full_from=1)

    @property
    def is_empty(self) -> bool:
        return not self.apex and self.full_from is None and all(p.is_empty for p in self.parts.values())

    def part(self, n: int) -> Optional[SubsetRep]:
        if self.full_from is not None and n >= self.full_from:
            if self.tail is None:
                return SubshiftSet(BALL_SHIFT)
            return None if self.tail.is_empty else self.tail
        part = self.parts.get(n)
        if part is None or part.is_empty:
            return None
        return part

    def has_tail(self, m: int) -> bool:
        """True iff the apex or some ball with index >= m is present."""
        if self.apex:
            return True
        if self.full_from is not None and (self.tail is None or not self.tail.is_empty):
            return True
        return any(n >= m and not part.is_empty for n, part in self.parts.items())

    def balls(self) -> Iterable[int]:
        return sorted(n for n, part in self.parts.items() if not part.is_empty)


def fan_separated_count(K: FanSet, n: int, m: int) -> int:
    """
    Exact s_n(d, T, 2^-m, K) on the fan.

    Balls below m are pairwise separated and each contributes its own
    census at the rescaled resolution m-b-1; everything at distance at most
    2^-m from the apex collapses into one class.
    """
    if n < 1 or m < 1:
        raise PreconditionError(f"fan counts need n >= 1 and m >= 1, got n={n}, m={m}")
    total = 1 if K.has_tail(m) else 0
    for b in range(1, m):
        part = K.part(b)
        if part is None:
            continue
        inner = m - b - 1
        total += 1 if inner <= 0 else part.window_count(separation_window(n, inner))
    return total


def fan_phi_set(x: FanPoint, m: int) -> FanSet:
    """
    Phi at 2^-m: all y with d(T^k x, T^k y) <= 2^-m for every k >= 0.

    Near the apex this is the apex together with every ball from m on; a
    ball point sees its whole ball when m = n+1 and a left-free cylinder of
    its ball when m >= n+2.
    """
    if m < 1:
        raise PreconditionError("resolution must be at least 1")
    if x.is_apex or m <= x.ball:
        return FanSet(apex=True, parts={}, full_from=m)
    if m == x.ball + 1:
        return FanSet(apex=False, parts={x.ball: SubshiftSet(BALL_SHIFT)})
    inner = m - x.ball - 1
    return FanSet(apex=False, parts={x.ball: LeftFreeCylinder(BALL_SHIFT, 1 - inner, x.point)})


def fan_apex_family(parts: Dict[int, SubsetRep]) -> FanSet:
    """
    A countable set converging to the apex: the apex plus finite sets in balls.

    Finite sets only, since an infinite subset of one ball would have a limit
    point inside that ball.
    """
    for n, part in parts.items():
        if part.kind != "finite":
            raise PreconditionError(f"ball {n} of an apex family must be finite")
    logger.debug("apex family over balls %s", sorted(parts))
    return FanSet(apex=True, parts=dict(parts))
