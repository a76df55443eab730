"""
Lowering: countable compact subsets with a prescribed entropy and one limit point.

Every construction here grows points next to a fixed admissible point x0.
A point of stage i agrees with x0 up to a coordinate b, carries a free
admissible block on (b, l_i+m-2] and rejoins x0 afterwards. Stages are
kept as ``BlockStage`` ranges of the lexicographically smallest blocks, so
the exact stage cardinalities ⌊e^{l h}⌋ + i can be certified long after the
points themselves would be too many to list.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

import sympy

from app.config import settings
from app.core.blocks import BlockLanguage, block_language
from app.core.entropy import EntropyEstimate, growth_estimate, reference_point, sft_entropy_exact, slope
from app.core.errors import (
    InadmissibleInput,
    NonConvergence,
    NotMixing,
    PreconditionError,
    SourceCapacityExceeded,
    SourceUnavailable,
    TargetOutOfRange,
    VerificationFailed,
    ZeroEntropyAmbient,
)
from app.core.fan import BALL_SHIFT, FanSet
from app.core.subsets import (
    BlockStage,
    CylinderTree,
    FinitePointSet,
    LeftFreeCylinder,
    ShiftedSet,
    Stage,
    StagedFamily,
    SubsetRep,
    SubshiftSet,
    UnionSet,
    validate_staged,
)
from app.core.symbolic import (
    BiInfinitePoint,
    Subshift,
    WindowSpec,
    higher_block,
    separation_window,
    shift_by,
    splice,
    window_of,
)

logger = logging.getLogger(__name__)


@lru_cache(maxsize=8192)
def floor_exp(l: int, h: float) -> int:
    """
    ⌊e^{l h}⌋ exactly.

    h is read through its shortest decimal repr as a rational, so l·h is a
    nonzero rational and e^{l h} is never an integer. The power is evaluated
    with all of its integer digits plus guard digits, and the guard grows
    until the fractional part is clear of both neighbouring integers.
    """
    exponent = sympy.Integer(l) * sympy.Rational(repr(h))
    if exponent == 0:
        return 1
    value = sympy.exp(exponent)
    digits = max(1, int(float(exponent) / math.log(10)) + 1)
    guard = 30
    while True:
        approx = value.evalf(digits + guard)
        whole = int(approx)
        frac = approx - whole
        margin = sympy.Rational(1, 10 ** (guard // 2))
        if margin < frac < 1 - margin:
            return whole
        guard *= 2


def exceeds_exp(k: int, l: int, h: float) -> bool:
    """k > e^{l h} for an integer k, decided exactly."""
    if k <= 0:
        return False
    gap = math.log(k) - l * h
    if abs(gap) > 1e-9 * (1.0 + l * h):
        return gap > 0
    return k > floor_exp(l, h)


@dataclass(frozen=True)
class Emission:
    points: Tuple[BiInfinitePoint, ...]
    exhausted: bool


@dataclass(frozen=True)
class PointSource:
    """
    Separated points next to ``limit`` in a mixing subshift.

    The capacity of the source is the entropy of its ambient subshift: from
    any context vertex the number of admissible blocks of length L grows
    like λ^L, and the counts are exact integers.
    """

    ambient: Subshift
    limit: BiInfinitePoint
    resolution: int

    def __post_init__(self):
        if self.resolution < 1:
            raise PreconditionError("resolution must be at least 1")
        if not self.ambient.is_admissible(self.limit):
            raise InadmissibleInput(f"{self.limit} is not a point of {self.ambient.label}")
        if not self.ambient.is_primitive():
            raise NotMixing(f"{self.ambient.label} is not mixing")
        if not self.capacity > 0:
            raise ZeroEntropyAmbient(f"{self.ambient.label} has zero entropy")

    @property
    def language(self) -> BlockLanguage:
        return block_language(self.ambient)

    @cached_property
    def capacity(self) -> float:
        s = self.ambient if self.ambient.is_one_step else higher_block(self.ambient)[0]
        return sft_entropy_exact(s)

    def available(self, b: int, hi: int) -> int:
        """Blocks on [b+1, hi] other than the limit's own."""
        if hi <= b:
            return 0
        return self.language.continuations(self.language.context(self.limit, b), hi - b) - 1

    def stage(self, length: int, b: int, count: int) -> BlockStage:
        return BlockStage(length, b + 1, length + self.resolution - 2, count)

    def point(self, stage: BlockStage, index: int = 0) -> BiInfinitePoint:
        """The index-th point of a block stage, in lexicographic order of blocks."""
        if not 0 <= index < stage.count:
            raise PreconditionError(f"stage has {stage.count} points, index {index} requested")
        language = self.language
        v = language.context(self.limit, stage.lo - 1)
        own = window_of(self.limit, stage.block)
        rank = index if index < language.rank(v, own) else index + 1
        block = language.unrank(v, stage.block.length, rank)
        end = language.end_vertex(v, block)
        return splice(self.limit, stage.lo, block + language.rejoin(end, self.limit, stage.hi))

    def emit(
        self,
        l: int,
        want: int,
        agree: Optional[WindowSpec] = None,
        exclude: FrozenSet[BiInfinitePoint] = frozenset(),
    ) -> Emission:
        """
        Up to ``want`` points that agree with x0 on ``agree`` (by default up to
        coordinate -m), pairwise (l, 2^-m)-separated, in lexicographic order.

        Returns:
            The points, and whether the source ran out before ``want``.
        """
        m = self.resolution
        b = agree.hi if agree is not None else -m
        if b < -m:
            raise PreconditionError(f"agreement must reach coordinate {-m}")
        hi = separation_window(l, m).hi
        if hi <= b:
            return Emission((), True)
        language = self.language
        v = language.context(self.limit, b)
        own = window_of(self.limit, WindowSpec(b + 1, hi))
        points: List[BiInfinitePoint] = []
        rejoins: Dict[int, tuple] = {}
        for block in language.blocks(v, hi - b):
            if len(points) >= want:
                break
            if block == own:
                continue
            end = language.end_vertex(v, block)
            if end not in rejoins:
                rejoins[end] = language.rejoin(end, self.limit, hi)
            p = splice(self.limit, b + 1, block + rejoins[end])
            if p not in exclude:
                points.append(p)
        exhausted = len(points) < want
        if exhausted:
            logger.info("source exhausted at l=%d: %d of %d points", l, len(points), want)
        return Emission(tuple(points), exhausted)


def entropy_point_family(s: Subshift, x0: BiInfinitePoint, m: int) -> PointSource:
    """The point source of x0 at resolution 2^-m."""
    return PointSource(s, x0, m)


def entropy_point_value(src: PointSource, n_max: Optional[int] = None) -> EntropyEstimate:
    """
    Certified log-growth of the source: the slope of the number of blocks it
    can emit right of -m, against the capacity entropy as the exact bracket.
    """
    n_max = max(n_max or settings.N_MAX, 4 * src.resolution)
    b = -src.resolution
    counts = [src.available(b, separation_window(l, src.resolution).hi) + 1 for l in range(1, n_max + 1)]
    value = min(max(slope(counts), 0.0), src.capacity)
    return EntropyEstimate(value, value, src.capacity, src.resolution, n_max, "capacity", tuple(counts))


@dataclass(frozen=True)
class StageBound:
    """Counts at and after one stage horizon against ⌊e^{l h}⌋ + n bounds."""

    length: int
    lower: int
    count: int
    upper: int
    between_checked: int = 0
    between_ok: bool = True

    @property
    def ok(self) -> bool:
        return self.lower <= self.count <= self.upper and self.between_ok


@dataclass
class LoweringCertificate:
    target: float
    resolution: int
    lengths: Tuple[int, ...]
    floors: Tuple[int, ...]
    cumulative: Tuple[int, ...]
    capacity: float
    open_tail: bool = True
    bounds: Tuple[StageBound, ...] = ()

    @property
    def identity_ok(self) -> bool:
        """|A_i| = ⌊e^{l_i h}⌋ + i at every stage."""
        return all(c == f + i for i, (f, c) in enumerate(zip(self.floors, self.cumulative), start=1))

    @property
    def ok(self) -> bool:
        return self.identity_ok and all(bound.ok for bound in self.bounds)


def _good_stages(src: PointSource, h: float, max_horizon: int) -> Iterator[Tuple[BlockStage, int]]:
    """
    Stages of the good construction, one at a time, with ⌊e^{l h}⌋.

    l_i is the least horizon past l_{i-1} whose free block admits the
    ⌊e^{l h}⌋ - ⌊e^{l_{i-1} h}⌋ + 1 new points that bring |A_i| to
    ⌊e^{l_i h}⌋ + i; the block starts right after ball_window(l_{i-1}, m).
    """
    m = src.resolution
    b, floor_prev, l = -m, 0, 0
    while True:
        for l in range(l + 1, max_horizon + 1):
            hi = l + m - 2
            # available + ⌊e^{l_{i-1} h}⌋ > e^{l h} is the stage condition
            if hi > b and exceeds_exp(src.available(b, hi) + floor_prev, l, h):
                break
        else:
            return
        floor_l = floor_exp(l, h)
        count = floor_l - floor_prev + 1
        yield src.stage(l, b, count), floor_l
        b, floor_prev = l - 1 + m, floor_l


def stage_bounds(F: StagedFamily, cert: LoweringCertificate) -> Tuple[StageBound, ...]:
    """
    Exact censuses against ⌊e^{l_n h}⌋ + n <= s_l <= ⌊e^{l h}⌋ + n + 1 for every
    l in [l_n, l_{n+1}), and for l_n alone at the last stored stage.
    """
    h, m = cert.target, F.resolution
    bounds = []
    lengths = list(F.lengths)
    for n, (l_n, floor_n) in enumerate(zip(lengths, cert.floors), start=1):
        count = F.window_count(separation_window(l_n, m))
        checked, between_ok = 0, True
        end = lengths[n] if n < len(lengths) else l_n
        for l in range(l_n + 1, end):
            s_l = F.window_count(separation_window(l, m))
            checked += 1
            if s_l < floor_n + n or exceeds_exp(s_l - n - 1, l, h):
                logger.info("count %d at l=%d breaks the bounds of stage %d", s_l, l, n)
                between_ok = False
                break
        bounds.append(StageBound(l_n, floor_n + n, count, floor_n + n + 1, checked, between_ok))
    return tuple(bounds)


def lemma_good_lower(
    src: PointSource,
    h: float,
    max_stages: Optional[int] = None,
    max_horizon: Optional[int] = None,
    check_bounds: bool = True,
) -> Tuple[StagedFamily, LoweringCertificate]:
    """
    A staged family A_∞ with separated entropy exactly h at the source resolution.

    Args:
        src: The point source.
        h: Target entropy in nats, 0 < h < capacity.
        max_stages: Stage budget (settings.MAX_STAGES by default).
        max_horizon: Largest horizon searched (settings.MAX_HORIZON by default).
        check_bounds: Re-count every horizon against the two-sided bounds.

    Returns:
        The open-tail family and its certificate.

    Raises:
        TargetOutOfRange: if h <= 0.
        SourceCapacityExceeded: if h >= capacity.
        NonConvergence: if not even one stage fits below the horizon budget.
        VerificationFailed: if the family or its certificate does not check.
    """
    if not h > 0:
        raise TargetOutOfRange(f"target {h} must be positive")
    if h >= src.capacity:
        raise SourceCapacityExceeded(f"target {h} is not below the capacity {src.capacity:.6f} of {src.ambient.label}")
    max_stages = max_stages or settings.MAX_STAGES
    max_horizon = max_horizon or settings.MAX_HORIZON

    stages: List[BlockStage] = []
    floors: List[int] = []
    for stage, floor_l in _good_stages(src, h, max_horizon):
        stages.append(stage)
        floors.append(floor_l)
        logger.info("stage %d: l=%d, %d new points, block [%d, %d]", len(stages), stage.length, stage.count, stage.lo, stage.hi)
        if len(stages) >= max_stages:
            break
    if not stages:
        raise NonConvergence(f"no stage of target {h} fits below horizon {max_horizon}")
    if len(stages) < max_stages:
        logger.info("horizon budget %d reached after %d stages", max_horizon, len(stages))

    cumulative = []
    total = 0
    for stage in stages:
        total += stage.count
        cumulative.append(total)
    cert = LoweringCertificate(
        target=h,
        resolution=src.resolution,
        lengths=tuple(s.length for s in stages),
        floors=tuple(floors),
        cumulative=tuple(cumulative),
        capacity=src.capacity,
    )
    family = StagedFamily(src.limit, src.resolution, tuple(stages), src.ambient, open_tail=True, certificate=cert)
    diagnostics = validate_staged(family)
    if not diagnostics.ok:
        raise VerificationFailed(f"constructed family fails validation: {diagnostics.failure}")
    if check_bounds:
        cert.bounds = stage_bounds(family, cert)
    if not cert.ok:
        raise VerificationFailed("stage counts break the certificate bounds")
    return family, cert


def full_capacity_family(src: PointSource, stages: int = 3, spread: int = 32) -> StagedFamily:
    """
    A staged family whose entropy is the full capacity.

    Stage k takes every block on its range; horizons grow by the factor
    ``spread``, so the free share l_k - l_{k-1} of each horizon tends to 1.
    """
    m = src.resolution
    b, l = -m, 0
    built = []
    for k in range(1, stages + 1):
        l = 1 if k == 1 else spread * (l + m)
        hi = l + m - 2
        built.append(src.stage(l, b, src.available(b, hi)))
        b = l - 1 + m
    family = StagedFamily(src.limit, m, tuple(built), src.ambient, open_tail=True)
    diagnostics = validate_staged(family)
    if not diagnostics.ok:
        raise VerificationFailed(f"capacity family fails validation: {diagnostics.failure}")
    logger.info("capacity family with horizons %s", family.lengths)
    return family


def family_estimate(F: StagedFamily, m: Optional[int] = None) -> EntropyEstimate:
    """Growth estimate of a constructed family at its own certified horizon."""
    m = m or F.resolution
    return growth_estimate(F, m, max(F.horizon, 4 * m))


@dataclass(frozen=True)
class LevelRecord:
    level: int
    target: float
    resolution: int
    stage_length: int
    block: Tuple[int, int]


def zero_entropy_infinite(
    src: PointSource,
    h_init: float,
    levels: int = 4,
    spread: int = 4,
    max_horizon: Optional[int] = None,
) -> StagedFamily:
    """
    {x0} ∪ {y_1, y_2, ...}: one representative per level of nested good families.

    Level n runs the good construction at target h_init/(n+1) and resolution
    m+n-1. Its representative is the first point of the first stage (from
    stage 2 on) whose block starts at or beyond ``spread`` times the reach of
    the previous representative, so the representatives converge to x0 and
    any window meets only logarithmically many of them. The returned family
    stores the first ``levels`` representatives with an open tail: every
    later one agrees with x0 left of its block, which starts beyond the last
    stored stage, so windows inside the certificate are counted exactly. The
    certificate is read at the finest level resolution m+levels-1.

    Raises:
        NonConvergence: if a level has no such stage below the horizon budget.
    """
    if not 0 < h_init < src.capacity:
        raise SourceCapacityExceeded(f"initial target {h_init} must lie in (0, {src.capacity:.6f})")
    m = src.resolution
    max_horizon = max_horizon or settings.MAX_HORIZON
    stages: List[Stage] = []
    records: List[LevelRecord] = []
    reach = None
    for n in range(1, levels + 1):
        level = PointSource(src.ambient, src.limit, m + n - 1)
        target = h_init / (n + 1)
        threshold = -math.inf if reach is None else spread * (reach + 2)
        chosen = None
        for i, (stage, _) in enumerate(_good_stages(level, target, max_horizon), start=1):
            if i >= 2 and stage.lo >= threshold:
                chosen = stage
                break
        if chosen is None:
            raise NonConvergence(f"level {n} has no stage beyond coordinate {threshold}")
        y = level.point(chosen)
        length = max(chosen.hi - m + 2, stages[-1].length + 1 if stages else 1)
        stages.append(Stage(length, frozenset({y})))
        records.append(LevelRecord(n, target, level.resolution, chosen.length, (chosen.lo, chosen.hi)))
        reach = chosen.hi
        logger.info("level %d: target %.6f at m=%d, representative %s", n, target, level.resolution, y)
    finest = m + levels - 1
    family = StagedFamily(src.limit, finest, tuple(stages), src.ambient, open_tail=True, certificate=tuple(records))
    diagnostics = validate_staged(family)
    if not diagnostics.ok:
        raise VerificationFailed(f"zero-entropy family fails validation: {diagnostics.failure}")
    return family


def member(E: SubsetRep) -> BiInfinitePoint:
    """Some point of E."""
    if E.is_empty:
        raise PreconditionError("the empty set has no points")
    if isinstance(E, SubshiftSet):
        return reference_point(E.ambient)
    if isinstance(E, FinitePointSet):
        return E.sorted_points()[0]
    if isinstance(E, StagedFamily):
        return E.limit
    if isinstance(E, LeftFreeCylinder):
        return E.tail
    if isinstance(E, CylinderTree):
        base = reference_point(E.ambient)
        return block_language(E.ambient).point_through(base, E.base, min(E.words))
    if isinstance(E, ShiftedSet):
        return shift_by(member(E.inner), E.offset)
    if isinstance(E, UnionSet):
        return member(next(part for part in E.parts if not part.is_empty))
    raise SourceUnavailable(f"no point can be drawn from a {E.kind} set")


def hul_lower(
    E: SubsetRep,
    h: float,
    s: Subshift,
    m: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> SubsetRep:
    """
    A subset of E with at most one limit point and entropy h.

    h = 0 gives a singleton; h at the entropy of E gives a full-capacity
    family (or E itself when E already has a single limit point); anything
    in between runs the good construction. Only whole mixing subshifts serve
    as sources.

    Raises:
        TargetOutOfRange: if h is negative or above the entropy of E.
        SourceUnavailable: if E offers no mixing source for a positive target.
    """
    tolerance = settings.ESTIMATE_TOL if tolerance is None else tolerance
    m = m or settings.RESOLUTIONS[0]
    if E.is_empty:
        raise PreconditionError("cannot lower the empty set")
    if E.ambient.alphabet > s.alphabet:
        raise PreconditionError(f"{E.ambient.label} is not inside {s.label}")
    if h < 0:
        raise TargetOutOfRange(f"target {h} is negative")
    if h == 0:
        return FinitePointSet(frozenset({member(E)}), E.ambient)

    if isinstance(E, StagedFamily):
        top = family_estimate(E)
    else:
        top = growth_estimate(E, m, max(settings.N_MAX, 4 * m))
    if h > top.value + tolerance:
        raise TargetOutOfRange(f"target {h} exceeds the entropy estimate {top.value:.6f} of the set")

    at_top = h >= top.value - tolerance
    if isinstance(E, StagedFamily) and at_top:
        return E
    if not isinstance(E, SubshiftSet):
        raise SourceUnavailable(f"a {E.kind} set offers no mixing source to lower from")
    try:
        src = PointSource(E.ambient, reference_point(E.ambient), m)
    except NotMixing as exc:
        raise SourceUnavailable(str(exc)) from exc
    if at_top or h >= src.capacity:
        return full_capacity_family(src)
    family, _ = lemma_good_lower(src, h)
    return family


def fan_estimate(K: FanSet, n_max: Optional[int] = None) -> EntropyEstimate:
    """
    Growth estimate of a fan set at two levels above the resolution of its
    lowered parts, read up to the horizon all their certificates cover.
    """
    parts = [p for p in list(K.parts.values()) + [K.tail] if p is not None]
    staged = [p for p in parts if isinstance(p, StagedFamily) and p.stages]
    inner = max((p.resolution for p in staged), default=settings.RESOLUTIONS[0])
    m = inner + 2
    horizon = min((p.horizon for p in staged), default=settings.N_MAX)
    return growth_estimate(K, m, max(n_max or horizon, 4 * m))


def fan_lower(K: FanSet, h: float, tolerance: Optional[float] = None) -> FanSet:
    """
    Lower every ball of K to min(h, its own entropy) and keep the apex.

    Raises:
        TargetOutOfRange: if h is negative or above the estimate of K.
    """
    tolerance = settings.ESTIMATE_TOL if tolerance is None else tolerance
    if h < 0:
        raise TargetOutOfRange(f"target {h} is negative")
    if h == 0:
        return FanSet(apex=True, parts={})
    top = fan_estimate(K)
    if h > top.value + tolerance:
        raise TargetOutOfRange(f"target {h} exceeds the fan estimate {top.value:.6f}")
    if h >= top.value - tolerance:
        logger.info("target %.6f is the entropy of the fan set; keeping it whole", h)
        return K

    def lowered(part: SubsetRep) -> SubsetRep:
        if part.kind == "finite":
            return part
        own = family_estimate(part).value if isinstance(part, StagedFamily) else growth_estimate(
            part, settings.RESOLUTIONS[0], settings.N_MAX
        ).value
        return hul_lower(part, min(h, own), BALL_SHIFT, tolerance=tolerance)

    parts = {n: lowered(part) for n, part in K.parts.items() if not part.is_empty}
    tail = None
    if K.full_from is not None:
        tail = lowered(K.tail if K.tail is not None else SubshiftSet(BALL_SHIFT))
    result = FanSet(apex=True, parts=parts, full_from=K.full_from, tail=tail)
    logger.info("fan lowered to %.6f over balls %s (tail from %s)", h, sorted(parts), K.full_from)
    return result


@dataclass
class PartitionReport:
    """Finite-horizon evidence that the sum rule fails for infinitely many finite pieces."""

    resolution: int
    horizon: int
    block_values: List[float]
    union_value: float
    thinned_value: float
    thinned_counts: Tuple[int, ...]
    target: float
    tolerance: float
    notes: List[str] = field(default_factory=lambda: ["finite-horizon evidence only"])

    @property
    def blocks_ok(self) -> bool:
        return all(v <= self.tolerance for v in self.block_values)

    @property
    def union_ok(self) -> bool:
        return self.union_value >= self.target - self.tolerance

    @property
    def thinned_ok(self) -> bool:
        return self.thinned_value <= self.tolerance

    @property
    def ok(self) -> bool:
        return self.blocks_ok and self.union_ok and self.thinned_ok


def counterexample_partition(
    src: PointSource,
    a: float,
    tolerance: Optional[float] = None,
) -> Tuple[List[StagedFamily], PartitionReport]:
    """
    Finite blocks B_j of one convergent sequence whose union has entropy a.

    The sequence lists the family of target a stage by stage; the blocks are
    the stages themselves, each finite. One point per stage is the thinned
    subsequence, whose counts grow with the number of stages only.

    Raises:
        TargetOutOfRange: if a <= 0.
        SourceCapacityExceeded: if a exceeds the capacity.
    """
    tolerance = settings.ESTIMATE_TOL if tolerance is None else tolerance
    if not a > 0:
        raise TargetOutOfRange(f"target {a} must be positive")
    if a > src.capacity + 1e-12:
        raise SourceCapacityExceeded(f"target {a} exceeds the capacity {src.capacity:.6f}")
    if a >= src.capacity - 1e-12:
        family = full_capacity_family(src)
    else:
        family, _ = lemma_good_lower(src, a, check_bounds=False)
    m = src.resolution

    blocks = [
        StagedFamily(src.limit, m, (stage,), src.ambient)
        for stage in family.stages
    ]
    block_values = [
        growth_estimate(block, m, max(2 * block.horizon, 4 * m)).value
        for block in blocks
    ]
    union = family_estimate(family)
    thinned = FinitePointSet(
        frozenset({src.limit} | {src.point(stage) for stage in family.stages}), src.ambient
    )
    thinned_estimate = growth_estimate(thinned, m, max(settings.N_MAX, 4 * m))
    report = PartitionReport(
        resolution=m,
        horizon=union.n_max,
        block_values=block_values,
        union_value=union.value,
        thinned_value=thinned_estimate.value,
        thinned_counts=thinned_estimate.counts,
        target=a,
        tolerance=tolerance,
    )
    logger.info(
        "partition of %d blocks: union %.6f, thinned %.6f, blocks max %.6f",
        len(blocks), union.value, thinned_estimate.value, max(block_values),
    )
    return blocks, report
