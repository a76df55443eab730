"""
Compact subsets of shift spaces and the window census.

Every representation answers one exact question: how many distinct words
do members of the set show on a coordinate window. Separated counts,
cover counts and tree outer approximations are all built on that census.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

import numpy as np

from app.config import settings
from app.core.blocks import block_language
from app.core.errors import BudgetExceeded, InadmissibleWord, PreconditionError, UncertifiedTail, WindowExceedsDepth
from app.core.symbolic import (
    BiInfinitePoint,
    Subshift,
    WindowSpec,
    Word,
    ball_window,
    separation_window,
    shift_by,
    splice,
    window_of,
    word_to_str,
)

logger = logging.getLogger(__name__)


class SubsetRep(ABC):
    """A compact subset of ``ambient`` with an exact window census."""

    ambient: Subshift
    kind: str = "abstract"

    @abstractmethod
    def window_words(self, w: WindowSpec) -> Set[Word]:
        """Distinct restrictions of members to ``w``."""

    def window_count(self, w: WindowSpec) -> int:
        return len(self.window_words(w))

    @property
    def is_empty(self) -> bool:
        return False


@dataclass(frozen=True)
class CensusResult:
    window: WindowSpec
    count: int
    witnesses: Optional[Tuple[Word, ...]] = None


def census(K: SubsetRep, w: WindowSpec, witnesses: bool = False) -> CensusResult:
    """
    Exact number of distinct restrictions of members of ``K`` to ``w``.

    Args:
        K: Any subset representation.
        w: The coordinate window.
        witnesses: Also return the words, sorted.

    Returns:
        The census; the empty set has count 0 on every window.
    """
    if witnesses:
        words = tuple(sorted(K.window_words(w)))
        return CensusResult(w, len(words), words)
    return CensusResult(w, K.window_count(w))


@dataclass(frozen=True)
class FinitePointSet(SubsetRep):
    points: FrozenSet[BiInfinitePoint]
    ambient: Subshift
    kind = "finite"

    def __post_init__(self):
        object.__setattr__(self, "points", frozenset(self.points))
        for p in self.points:
            if not self.ambient.is_admissible(p):
                raise InadmissibleWord(f"point {p} is not admissible in {self.ambient.label}")

    @property
    def is_empty(self) -> bool:
        return not self.points

    def sorted_points(self) -> List[BiInfinitePoint]:
        return sorted(self.points, key=BiInfinitePoint.sort_key)

    def window_words(self, w: WindowSpec) -> Set[Word]:
        return {window_of(p, w) for p in self.points}


@dataclass(frozen=True)
class CylinderTree(SubsetRep):
    """
    All ambient points whose restriction to [base, base+depth-1] is one of ``words``.

    Each word must occur in the ambient subshift, so every window of every
    word is realized by some member.
    """

    base: int
    depth: int
    words: FrozenSet[Word]
    ambient: Subshift
    kind = "tree"

    def __post_init__(self):
        object.__setattr__(self, "words", frozenset(tuple(w) for w in self.words))
        if self.depth < 1:
            raise PreconditionError("tree depth must be at least 1")
        if not self.words:
            raise PreconditionError("a cylinder tree needs at least one word")
        for w in self.words:
            if len(w) != self.depth:
                raise PreconditionError(f"word {word_to_str(w)} does not have length {self.depth}")
            if not self.ambient.extends(w):
                raise InadmissibleWord(f"word {word_to_str(w)} does not occur in {self.ambient.label}")

    @property
    def span(self) -> WindowSpec:
        return WindowSpec(self.base, self.base + self.depth - 1)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Words as rows of an integer array, lexicographically sorted."""
        return np.array(sorted(self.words), dtype=np.int64).reshape(len(self.words), self.depth)

    def prefix_count(self, n: int) -> int:
        """Number of distinct length-n prefixes (n = 0 gives 1)."""
        if n <= 0:
            return 1
        return self.window_count(WindowSpec(self.base, self.base + n - 1))

    def window_words(self, w: WindowSpec) -> Set[Word]:
        if not self.span.contains(w):
            raise WindowExceedsDepth(f"window [{w.lo}, {w.hi}] exceeds tree span [{self.span.lo}, {self.span.hi}]")
        lo, hi = w.lo - self.base, w.hi - self.base + 1
        return {word[lo:hi] for word in self.words}

    def window_count(self, w: WindowSpec) -> int:
        if not self.span.contains(w):
            raise WindowExceedsDepth(f"window [{w.lo}, {w.hi}] exceeds tree span [{self.span.lo}, {self.span.hi}]")
        cols = self.matrix[:, w.lo - self.base:w.hi - self.base + 1]
        return int(np.unique(cols, axis=0).shape[0])


@dataclass(frozen=True)
class SubshiftSet(SubsetRep):
    """The whole ambient subshift as a subset of itself."""

    ambient: Subshift
    kind = "whole"

    @property
    def is_empty(self) -> bool:
        return self.ambient.is_empty

    def window_words(self, w: WindowSpec) -> Set[Word]:
        return set(self.ambient.language(w.length))

    def window_count(self, w: WindowSpec) -> int:
        return self.ambient.language_count(w.length)


@dataclass(frozen=True)
class Stage:
    length: int
    points: FrozenSet[BiInfinitePoint]

    def __post_init__(self):
        object.__setattr__(self, "points", frozenset(self.points))

    @property
    def size(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class BlockStage:
    """
    A stage given by rank instead of by listing.

    Its points are the ``count`` lexicographically smallest admissible
    blocks on [lo, hi] other than the limit's own, each spliced into the
    limit point and rejoined to it by the shortest connector.
    """

    length: int
    lo: int
    hi: int
    count: int

    @property
    def size(self) -> int:
        return self.count

    @property
    def block(self) -> WindowSpec:
        return WindowSpec(self.lo, self.hi)


@lru_cache(maxsize=64)
def _block_points(ambient: Subshift, limit: BiInfinitePoint, stage: BlockStage, budget: int) -> FrozenSet[BiInfinitePoint]:
    if stage.count > budget:
        raise BudgetExceeded(f"stage of {stage.count} points exceeds the materialization budget {budget}")
    language = block_language(ambient)
    v = language.context(limit, stage.lo - 1)
    own = window_of(limit, stage.block)
    rejoins: Dict[int, Word] = {}
    points: List[BiInfinitePoint] = []
    for block in language.blocks(v, stage.block.length):
        if block == own:
            continue
        end = language.end_vertex(v, block)
        if end not in rejoins:
            rejoins[end] = language.rejoin(end, limit, stage.hi)
        points.append(splice(limit, stage.lo, block + rejoins[end]))
        if len(points) == stage.count:
            break
    return frozenset(points)


@lru_cache(maxsize=256)
def _stage_frame(ambient: Subshift, limit: BiInfinitePoint, stage: BlockStage) -> Tuple[int, Word, int]:
    """Context vertex, the limit's own block and its rank."""
    language = block_language(ambient)
    v = language.context(limit, stage.lo - 1)
    own = window_of(limit, stage.block)
    return v, own, language.rank(v, own)


def block_new_classes(ambient: Subshift, limit: BiInfinitePoint, stage: BlockStage, w: WindowSpec) -> int:
    """
    Number of classes a block stage adds on ``w`` besides the limit's class.

    Windows that start at or before the block read a prefix of every block,
    and the prefixes of the first N blocks are counted by rank. Other
    windows fall back to listing the stage.
    """
    if w.hi < stage.lo:
        return 0
    language = block_language(ambient)
    if w.lo > stage.hi and language.full:
        return 0
    if w.lo > stage.lo:
        target = window_of(limit, w)
        points = _block_points(ambient, limit, stage, settings.MAX_POINTS)
        return len({window_of(p, w) for p in points} - {target})
    if w.hi >= stage.hi:
        return stage.count
    v, own, own_rank = _stage_frame(ambient, limit, stage)
    length = stage.block.length
    j = w.hi - stage.lo + 1
    if own_rank <= stage.count:
        return language.distinct_prefixes(v, length, stage.count + 1, j) - 1
    shown = language.distinct_prefixes(v, length, stage.count, j)
    last = language.unrank(v, length, stage.count - 1, j)
    return shown - (1 if own[:j] == last else 0)


@dataclass(frozen=True)
class StagedFamily(SubsetRep):
    """
    {x0} plus finitely many stages of new points converging to x0.

    Stage i >= 2 agrees with x0 on ball_window(l_{i-1}, m); this certificate
    lets the census cut off all stages that cannot be seen on a window.
    With ``open_tail`` the stored stages are a prefix of an infinite
    construction and windows beyond the last certificate are refused.
    Stages are either all listed (``Stage``) or all given by rank
    (``BlockStage``); block stages are counted without being listed.
    """

    limit: BiInfinitePoint
    resolution: int
    stages: Tuple[Union[Stage, BlockStage], ...]
    ambient: Subshift
    open_tail: bool = False
    certificate: Optional[object] = field(default=None, compare=False)
    kind = "staged"

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def lengths(self) -> List[int]:
        return [stage.length for stage in self.stages]

    @property
    def symbolic(self) -> bool:
        return any(isinstance(stage, BlockStage) for stage in self.stages)

    @property
    def size(self) -> int:
        """Number of stage points, the limit excluded."""
        return sum(stage.size for stage in self.stages)

    @property
    def horizon(self) -> int:
        """The largest horizon whose separation windows the certificate covers."""
        return self.stages[-1].length + 1 if self.stages else 1

    def stage_points(self, stage: Union[Stage, BlockStage]) -> FrozenSet[BiInfinitePoint]:
        if isinstance(stage, Stage):
            return stage.points
        return _block_points(self.ambient, self.limit, stage, settings.MAX_POINTS)

    @property
    def certified_window(self) -> Optional[WindowSpec]:
        """Windows inside this one are counted exactly even with an open tail."""
        if not self.stages:
            return None
        return ball_window(self.stages[-1].length, self.resolution)

    def visible_stages(self, w: WindowSpec) -> int:
        """Number of leading stages that can differ from x0 on ``w``."""
        for i in range(1, len(self.stages)):
            if ball_window(self.stages[i - 1].length, self.resolution).contains(w):
                return i
        if self.open_tail:
            certified = self.certified_window
            if certified is None or not certified.contains(w):
                raise UncertifiedTail(
                    f"window [{w.lo}, {w.hi}] is beyond the certificate of the last stored stage"
                )
        return len(self.stages)

    def points_until(self, count: int) -> Iterable[BiInfinitePoint]:
        yield self.limit
        for stage in self.stages[:count]:
            yield from self.stage_points(stage)

    def all_points(self) -> List[BiInfinitePoint]:
        return list(self.points_until(len(self.stages)))

    def cumulative(self, i: int) -> List[BiInfinitePoint]:
        """A_i: the new points of stages 1..i."""
        return [p for stage in self.stages[:i] for p in self.stage_points(stage)]

    def window_words(self, w: WindowSpec) -> Set[Word]:
        cut = self.visible_stages(w)
        logger.debug("staged census on [%d, %d] reads %d of %d stages", w.lo, w.hi, cut, len(self.stages))
        return {window_of(p, w) for p in self.points_until(cut)}

    def window_count(self, w: WindowSpec) -> int:
        if not self.symbolic:
            return len(self.window_words(w))
        cut = self.visible_stages(w)
        # block stages differ from x0 inside disjoint blocks, so their classes add up
        return 1 + sum(block_new_classes(self.ambient, self.limit, stage, w) for stage in self.stages[:cut])


@dataclass(frozen=True)
class LeftFreeCylinder(SubsetRep):
    """
    {y in ambient : y_j = tail_j for all j >= fixed_from}.

    The forward tracking set of a point: coordinates left of ``fixed_from``
    are free subject to admissibility.
    """

    ambient: Subshift
    fixed_from: int
    tail: BiInfinitePoint
    kind = "leftfree"

    def window_words(self, w: WindowSpec) -> Set[Word]:
        if w.lo >= self.fixed_from:
            return {window_of(self.tail, w)}
        free = self.fixed_from - w.lo
        pad = self.ambient.step + self.ambient.max_forbidden_len + 1
        anchor = window_of(self.tail, WindowSpec(self.fixed_from, self.fixed_from + pad - 1))
        fixed_part = window_of(self.tail, WindowSpec(self.fixed_from, w.hi)) if w.hi >= self.fixed_from else ()
        words = set()
        for u in self.ambient.language(free):
            if self.ambient.extends(u + anchor):
                words.add((u + fixed_part)[:w.length])
        return words


@dataclass(frozen=True)
class ShiftedSet(SubsetRep):
    """T^t applied to a representation without a closed form for the shift."""

    inner: SubsetRep
    offset: int
    kind = "shifted"

    @property
    def ambient(self) -> Subshift:
        return self.inner.ambient

    @property
    def is_empty(self) -> bool:
        return self.inner.is_empty

    def window_words(self, w: WindowSpec) -> Set[Word]:
        return self.inner.window_words(w.shifted(self.offset))

    def window_count(self, w: WindowSpec) -> int:
        return self.inner.window_count(w.shifted(self.offset))


@dataclass(frozen=True)
class UnionSet(SubsetRep):
    """Finite union of representations over one ambient subshift."""

    parts: Tuple[SubsetRep, ...]
    ambient: Subshift
    kind = "union"

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if any(part.ambient != self.ambient for part in self.parts):
            raise PreconditionError("union parts must share one ambient subshift")

    @property
    def is_empty(self) -> bool:
        return all(part.is_empty for part in self.parts)

    def window_words(self, w: WindowSpec) -> Set[Word]:
        words: Set[Word] = set()
        for part in self.parts:
            words |= part.window_words(w)
        return words


def shift_set(K: SubsetRep, t: int) -> SubsetRep:
    """The set {shift_by(x, t) : x in K}."""
    if isinstance(K, FinitePointSet):
        return FinitePointSet(frozenset(shift_by(p, t) for p in K.points), K.ambient)
    if isinstance(K, CylinderTree):
        return CylinderTree(K.base - t, K.depth, K.words, K.ambient)
    if isinstance(K, SubshiftSet):
        return K
    return ShiftedSet(K, t)


def empty_set(ambient: Subshift) -> FinitePointSet:
    return FinitePointSet(frozenset(), ambient)


def outer_tree(K: SubsetRep, depth: int, base: int = 0) -> CylinderTree:
    """
    The depth-D cylinder outer approximation of ``K`` at ``base``.

    The returned tree contains K and has the same census on every window
    inside [base, base+depth-1].
    """
    if isinstance(K, CylinderTree) and K.base == base and K.depth == depth:
        return K
    words = K.window_words(WindowSpec(base, base + depth - 1))
    if not words:
        raise PreconditionError("the empty set has no cylinder tree")
    return CylinderTree(base, depth, frozenset(words), K.ambient)


@dataclass
class StagedDiagnostics:
    ok: bool
    failure: Optional[str] = None
    stage: Optional[int] = None
    checked: List[str] = field(default_factory=list)


def validate_staged(F: StagedFamily) -> StagedDiagnostics:
    """
    Re-check everything a staged family claims.

    Stage lengths increase, x0 is not a stage point, all points are
    admissible, stage i >= 2 agrees with x0 on ball_window(l_{i-1}, m) and
    each cumulative A_i is (l_i, 2^-m)-separated.
    Failures are reported, never raised.
    """
    report = StagedDiagnostics(ok=True)
    m = F.resolution

    def fail(message: str, stage: Optional[int] = None) -> StagedDiagnostics:
        report.ok = False
        report.failure = message
        report.stage = stage
        logger.info("staged family rejected at stage %s: %s", stage, message)
        return report

    lengths = F.lengths
    if any(a >= b for a, b in zip(lengths, lengths[1:])) or any(l < 1 for l in lengths):
        return fail("stage lengths are not strictly increasing positive integers")
    report.checked.append("monotone")

    if not F.ambient.is_admissible(F.limit):
        return fail("limit point is not admissible")
    if F.symbolic:
        if not all(isinstance(stage, BlockStage) for stage in F.stages):
            return fail("listed and block stages cannot be mixed")
        return _validate_blocks(F, report, fail)
    seen: Set[BiInfinitePoint] = set()
    for i, stage in enumerate(F.stages, start=1):
        if F.limit in stage.points:
            return fail("limit point listed as a stage point", i)
        if seen & stage.points:
            return fail("point repeated across stages", i)
        seen |= stage.points
        for p in stage.points:
            if not F.ambient.is_admissible(p):
                return fail(f"point {p} is not admissible", i)
    report.checked.append("admissible")

    for i in range(2, len(F.stages) + 1):
        w = ball_window(lengths[i - 2], m)
        target = window_of(F.limit, w)
        for p in F.stages[i - 1].points:
            if window_of(p, w) != target:
                return fail(f"point {p} leaves the ball certificate", i)
    report.checked.append("certificate")

    for i in range(1, len(F.stages) + 1):
        w = separation_window(lengths[i - 1], m)
        points = F.cumulative(i)
        if len({window_of(p, w) for p in points}) != len(points):
            return fail("cumulative set is not separated at its stage horizon", i)
    report.checked.append("separated")
    return report


def _validate_blocks(F: StagedFamily, report: StagedDiagnostics, fail) -> StagedDiagnostics:
    """
    Block stages are checked by their parameters: blocks are paths of the
    essential graph, so points are admissible; a block inside the stage's
    separation window keeps distinct blocks separated; a block starting
    right of the previous ball window keeps the certificate and separates
    the stage from every earlier one.
    """
    m = F.resolution
    language = block_language(F.ambient)
    for i, stage in enumerate(F.stages, start=1):
        if stage.lo > stage.hi or stage.lo < 1 - m:
            return fail(f"block [{stage.lo}, {stage.hi}] is empty or starts left of the separation window", i)
        if stage.count < 1:
            return fail("block stage without points", i)
        capacity = language.continuations(language.context(F.limit, stage.lo - 1), stage.block.length) - 1
        if stage.count > capacity:
            return fail(f"{stage.count} points requested but only {capacity} blocks are available", i)
    report.checked.append("admissible")

    for i in range(2, len(F.stages) + 1):
        reach = ball_window(F.stages[i - 2].length, m).hi
        if F.stages[i - 1].lo <= reach:
            return fail(f"block starts at {F.stages[i - 1].lo}, inside the ball window ending at {reach}", i)
    report.checked.append("certificate")

    for i, stage in enumerate(F.stages, start=1):
        if stage.hi > separation_window(stage.length, m).hi:
            return fail("block reaches beyond the separation window of its stage", i)
    report.checked.append("separated")
    return report


def random_tree(
    ambient: Subshift,
    depth: int,
    rng: np.random.Generator,
    keep: float = 0.6,
    base: int = 0,
) -> CylinderTree:
    """
    A random subtree of the ambient language tree.

    Each child of a kept node survives with probability ``keep``; at least
    one child per node is always kept, so every branch reaches ``depth``.
    """
    frontier: List[Word] = [w for w in ambient.language(1)]
    frontier = [w for w in frontier if rng.random() < keep] or frontier[:1]
    for _ in range(depth - 1):
        grown: List[Word] = []
        for w in frontier:
            children = [w + (a,) for a in ambient.followers(w)]
            picked = [c for c in children if rng.random() < keep]
            grown.extend(picked or [children[int(rng.integers(len(children)))]])
        frontier = grown
    return CylinderTree(base, depth, frozenset(frontier), ambient)


def random_finite_set(
    ambient: Subshift,
    size: int,
    rng: np.random.Generator,
    span: int = 6,
) -> FinitePointSet:
    """Up to ``size`` points that differ from a constant point on a short block."""
    rest = next(a for a in range(ambient.alphabet) if ambient.extends((a,) * (2 * ambient.step + 2)))
    background = BiInfinitePoint.constant(rest)
    points = set()
    for _ in range(size):
        length = int(rng.integers(1, span + 1))
        block = tuple(int(s) for s in rng.integers(0, ambient.alphabet, size=length))
        offset = int(rng.integers(-span, span + 1))
        p = BiInfinitePoint((rest,), block, (rest,), offset)
        if ambient.is_admissible(p):
            points.add(p)
    if not points:
        points.add(background)
    return FinitePointSet(frozenset(points), ambient)
