"""
Factor maps between subshifts.

Sliding block codes, images of sets under a code, fiber entropy from word
preimage counts, the sandwich inequality h(πE) <= h(E) <= h(πE) + h(X|π),
the natural extension of a one-sided shift and the augmentation that makes
any system the image of a surjective one.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from app.config import settings
from app.core.blocks import block_language
from app.core.entropy import EntropyEstimate, growth_estimate, reference_point, slope
from app.core.errors import BudgetExceeded, InadmissibleInput, NotSurjective, PreconditionError
from app.core.subsets import (
    CylinderTree,
    FinitePointSet,
    LeftFreeCylinder,
    Stage,
    StagedFamily,
    SubsetRep,
    SubshiftSet,
    census,
)
from app.core.symbolic import BiInfinitePoint, Subshift, WindowSpec, Word, separation_window, word_to_str

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlidingBlockCode:
    """
    y_i = rule(x_{i-a} .. x_{i+b}) with memory a and anticipation b.

    The rule must be defined on every admissible (a+b+1)-word of the source
    and send every admissible word into the target language.
    """

    source: Subshift
    target: Subshift
    memory: int
    anticipation: int
    rule: Mapping[Word, int] = field(compare=False)
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.memory < 0 or self.anticipation < 0:
            raise PreconditionError("memory and anticipation must be non-negative")
        object.__setattr__(self, "rule", {tuple(k): int(v) for k, v in dict(self.rule).items()})
        missing = [w for w in self.source.language(self.window) if w not in self.rule]
        if missing:
            raise InadmissibleInput(f"rule is undefined on {len(missing)} words, e.g. {word_to_str(missing[0])}")
        if any(not 0 <= v < self.target.alphabet for v in self.rule.values()):
            raise InadmissibleInput(f"rule leaves the alphabet of {self.target.label}")
        # every forbidden target word has to be ruled out by the source language
        reach = self.window + self.target.max_forbidden_len - 1
        for word in self.source.language(reach) if self.target.forbidden else ():
            image = self.apply_word(word)
            if not self.target.word_admissible(image):
                raise InadmissibleInput(f"{word_to_str(word)} maps to {word_to_str(image)}, outside {self.target.label}")

    @property
    def window(self) -> int:
        return self.memory + self.anticipation + 1

    @property
    def label(self) -> str:
        return self.name or f"code({self.source.label} -> {self.target.label})"

    @classmethod
    def identity(cls, s: Subshift) -> "SlidingBlockCode":
        return cls(s, s, 0, 0, {(a,): a for a in range(s.alphabet)}, name=f"id({s.label})")

    @classmethod
    def symbol_map(cls, source: Subshift, target: Subshift, mapping: Sequence[int], name: Optional[str] = None) -> "SlidingBlockCode":
        """The one-block code a -> mapping[a]."""
        if len(mapping) != source.alphabet:
            raise InadmissibleInput(f"symbol map needs {source.alphabet} entries, got {len(mapping)}")
        return cls(source, target, 0, 0, {(a,): b for a, b in enumerate(mapping)}, name=name)

    @classmethod
    def modulo(cls, k: int, j: int) -> "SlidingBlockCode":
        """The full k-shift onto the full j-shift by a -> a mod j."""
        return cls.symbol_map(Subshift.full(k), Subshift.full(j), [a % j for a in range(k)], name=f"mod-{j}")

    @classmethod
    def collapse(cls, s: Subshift) -> "SlidingBlockCode":
        """Everything onto the one-point shift."""
        return cls.symbol_map(s, Subshift.full(1), [0] * s.alphabet, name=f"collapse({s.label})")

    def apply_word(self, word: Sequence[int]) -> Word:
        """Image of a source word; it is a+b symbols shorter."""
        word, k = tuple(word), self.window
        try:
            return tuple(self.rule[word[i:i + k]] for i in range(len(word) - k + 1))
        except KeyError as exc:
            raise InadmissibleInput(f"{word_to_str(word)} is not in the language of {self.source.label}") from exc

    @cached_property
    def surjective(self) -> bool:
        """Certified onto: a symbol map from a full shift covering a full target alphabet."""
        return (
            not self.source.forbidden
            and not self.target.forbidden
            and self.memory == 0
            and self.anticipation == 0
            and set(self.rule.values()) == set(range(self.target.alphabet))
        )

    @cached_property
    def injective(self) -> bool:
        return self.memory == 0 and self.anticipation == 0 and len(set(self.rule.values())) == len(self.rule)


@dataclass(frozen=True)
class CodeImage(SubsetRep):
    """π(K) for a set without a closed-form image; windows are read through the code."""

    code: SlidingBlockCode
    inner: SubsetRep
    kind = "image"

    @property
    def ambient(self) -> Subshift:
        return self.code.target

    @property
    def is_empty(self) -> bool:
        return self.inner.is_empty

    def window_words(self, w: WindowSpec) -> Set[Word]:
        wide = WindowSpec(w.lo - self.code.memory, w.hi + self.code.anticipation)
        return {self.code.apply_word(u) for u in self.inner.window_words(wide)}


def _image_point(c: SlidingBlockCode, x: BiInfinitePoint) -> BiInfinitePoint:
    if not c.source.is_admissible(x):
        raise InadmissibleInput(f"{x} is not a point of {c.source.label}")
    lp, rp = len(x.left_period), len(x.right_period)
    start = x.anchor - c.memory - c.anticipation - lp
    end = x.anchor + len(x.center) + c.memory + c.anticipation + rp

    def at(i: int) -> int:
        return c.rule[tuple(x.symbol_at(j) for j in range(i - c.memory, i + c.anticipation + 1))]

    left = tuple(at(start - lp + k) for k in range(lp))
    center = tuple(at(i) for i in range(start, end))
    right = tuple(at(end + k) for k in range(rp))
    return BiInfinitePoint(left, center, right, start)


def _image_staged(c: SlidingBlockCode, F: StagedFamily) -> StagedFamily:
    """
    Images agree with π(x0) on ball windows shrunk by max(a, b), so the
    image family keeps the stage lengths at resolution m - max(a, b).
    """
    m = F.resolution - max(c.memory, c.anticipation)
    if m < 1:
        raise PreconditionError(f"code window {c.window} swallows resolution {F.resolution}")
    limit = _image_point(c, F.limit)
    seen = {limit}
    stages = []
    for stage in F.stages:
        images = frozenset(_image_point(c, p) for p in F.stage_points(stage)) - seen
        seen |= images
        if images:
            stages.append(Stage(stage.length, images))
    logger.debug("image of staged family keeps %d of %d stages", len(stages), len(F.stages))
    return StagedFamily(limit, m, tuple(stages), c.target, open_tail=F.open_tail)


def apply_code(c: SlidingBlockCode, x: Union[BiInfinitePoint, SubsetRep]) -> Union[BiInfinitePoint, SubsetRep]:
    """
    The image of a point or of a set.

    Points, finite sets, trees and staged families get exact images of the
    same kind; a tree loses a coordinates on the left and b on the right.
    A whole subshift maps to the whole target when the code is certified
    onto; everything else is read through ``CodeImage``.

    Raises:
        InadmissibleInput: if the input does not live in the source.
    """
    if isinstance(x, BiInfinitePoint):
        return _image_point(c, x)
    if x.ambient != c.source:
        raise InadmissibleInput(f"set lives in {x.ambient.label}, the code reads {c.source.label}")
    if isinstance(x, FinitePointSet):
        return FinitePointSet(frozenset(_image_point(c, p) for p in x.points), c.target)
    if isinstance(x, CylinderTree):
        depth = x.depth - c.memory - c.anticipation
        if depth < 1:
            raise PreconditionError(f"tree of depth {x.depth} is shorter than the code window {c.window}")
        return CylinderTree(x.base + c.memory, depth, frozenset(c.apply_word(w) for w in x.words), c.target)
    if isinstance(x, StagedFamily):
        return _image_staged(c, x)
    if isinstance(x, SubshiftSet) and c.surjective:
        return SubshiftSet(c.target)
    return CodeImage(c, x)


def _labelled_graph(c: SlidingBlockCode) -> Tuple[int, Dict[int, np.ndarray]]:
    """
    States are source words of length r = max(a+b, step); an edge appends a
    symbol and is labelled by the rule on the last a+b+1 symbols.
    """
    r = max(c.window - 1, c.source.step, 1)
    states = c.source.language(r)
    index = {w: i for i, w in enumerate(states)}
    matrices: Dict[int, np.ndarray] = {}
    for word in c.source.language(r + 1):
        u, v = index.get(word[:-1]), index.get(word[1:])
        if u is None or v is None:
            continue
        label = c.rule[word[-c.window:]]
        matrix = matrices.setdefault(label, np.zeros((len(states), len(states)), dtype=object))
        matrix[u, v] += 1
    return len(states), matrices


def preimage_maxima(c: SlidingBlockCode, n_max: int, budget: Optional[int] = None) -> List[int]:
    """
    max over target n-words w of the number of source paths spelling a
    preimage of w, for n = 1..n_max.

    Row vectors of path counts are propagated per label and deduplicated.

    Raises:
        BudgetExceeded: if more than ``budget`` distinct count vectors appear.
    """
    budget = budget or settings.MAX_POINTS
    size, matrices = _labelled_graph(c)
    frontier = {tuple([1] * size)}
    maxima = []
    for n in range(1, n_max + 1):
        grown = set()
        for row in frontier:
            vector = np.array(row, dtype=object)
            for matrix in matrices.values():
                image = vector.dot(matrix)
                if any(image):
                    grown.add(tuple(int(v) for v in image))
        if len(grown) > budget:
            raise BudgetExceeded(f"{len(grown)} preimage profiles at n={n} exceed the budget {budget}")
        frontier = grown
        maxima.append(max(sum(row) for row in frontier))
    return maxima


def fiber_entropy_sup(c: SlidingBlockCode, n_max: Optional[int] = None) -> EntropyEstimate:
    """
    h(X|π) estimated by the growth of the largest preimage count of a target word.

    This bounds sup_y h(π^{-1}(y)) from above and equals it for symbol maps
    and projections.
    """
    n_max = n_max or settings.N_MAX
    maxima = preimage_maxima(c, n_max)
    value = max(slope(maxima), 0.0)
    logger.info("fiber entropy of %s: %.9f", c.label, value)
    return EntropyEstimate(value, value, value, 0, n_max, "word-preimage", tuple(maxima))


@dataclass
class SandwichReport:
    image_value: float
    set_value: float
    fiber_value: float
    tolerance: float
    window_counts: List[Tuple[int, int, int]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def defect(self) -> float:
        return self.set_value - self.image_value

    @property
    def lower_ok(self) -> bool:
        return self.image_value <= self.set_value + self.tolerance

    @property
    def upper_ok(self) -> bool:
        return self.set_value <= self.image_value + self.fiber_value + self.tolerance

    @property
    def counts_ok(self) -> bool:
        """Image census never exceeds the source census on the widened window."""
        return all(image <= source for _, image, source in self.window_counts)

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok and self.counts_ok


def sandwich_check(
    c: SlidingBlockCode,
    E: SubsetRep,
    m: int,
    n_max: int,
    tolerance: Optional[float] = None,
    fiber: Optional[EntropyEstimate] = None,
) -> SandwichReport:
    """
    Check h(S, πE) <= h(T, E) <= h(S, πE) + h(T, X|π).

    The lower inequality is also checked exactly at every horizon: the
    image census on separation_window(n, m) is at most the source census
    on that window widened by a on the left and b on the right.
    """
    tolerance = settings.ESTIMATE_TOL if tolerance is None else tolerance
    image = apply_code(c, E)
    fiber = fiber or fiber_entropy_sup(c)
    set_value = growth_estimate(E, m, n_max).value
    image_value = growth_estimate(image, m, n_max).value
    counts = []
    for n in range(1, n_max + 1):
        w = separation_window(n, m)
        wide = WindowSpec(w.lo - c.memory, w.hi + c.anticipation)
        counts.append((n, census(image, w).count, census(E, wide).count))
    report = SandwichReport(image_value, set_value, fiber.value, tolerance, counts)
    if c.memory or c.anticipation:
        report.notes.append(f"source windows widened by {c.memory} left and {c.anticipation} right")
    logger.info(
        "sandwich for %s: %.6f <= %.6f <= %.6f + %.6f (%s)",
        c.label, image_value, set_value, image_value, fiber.value, "ok" if report.ok else "FAILED",
    )
    return report


def sandwich_survey(
    c: SlidingBlockCode, sets: Iterable[SubsetRep], m: int, n_max: int, tolerance: Optional[float] = None
) -> Tuple[List[SandwichReport], float, float]:
    """Reports for many sets, the largest defect h(E) - h(πE) and the fiber entropy it is bounded by."""
    fiber = fiber_entropy_sup(c)
    reports = [sandwich_check(c, E, m, n_max, tolerance, fiber) for E in sets]
    worst = max((r.defect for r in reports), default=0.0)
    return reports, worst, fiber.value


@dataclass
class NaturalExtensionReport:
    counts: List[Tuple[int, int, int]]
    fiber_values: List[float]
    tolerance: float

    @property
    def counts_ok(self) -> bool:
        return all(one == two for _, one, two in self.counts)

    @property
    def fiber_ok(self) -> bool:
        return all(v <= self.tolerance for v in self.fiber_values)

    @property
    def ok(self) -> bool:
        return self.counts_ok and self.fiber_ok


@dataclass(frozen=True)
class NaturalExtensionSystem:
    """
    The inverse limit of a surjective one-sided shift: the two-sided shift
    on the same forbidden words. Its projection to coordinates >= 0 has
    fibers that are left-free cylinders.
    """

    base: Subshift
    extension: Subshift

    def fiber(self, y: BiInfinitePoint) -> SubsetRep:
        return LeftFreeCylinder(self.extension, 0, y)

    def check(
        self,
        n_max: Optional[int] = None,
        samples: int = 10,
        m: Optional[int] = None,
        seed: Optional[int] = None,
        tolerance: Optional[float] = None,
    ) -> NaturalExtensionReport:
        """Word counts of both shifts up to n_max, and fiber slopes at sampled points."""
        n_max = n_max or settings.N_MAX
        m = m or settings.RESOLUTIONS[0]
        tolerance = settings.ESTIMATE_TOL if tolerance is None else tolerance
        counts = [
            (n, self.base.language_count(n, one_sided=True), self.extension.language_count(n))
            for n in range(1, n_max + 1)
        ]
        horizon = max(settings.N_MAX // 2, 4 * m)
        fibers = [growth_estimate(self.fiber(y), m, horizon).value for y in self.sample_points(samples, seed)]
        report = NaturalExtensionReport(counts, fibers, tolerance)
        logger.info("natural extension of %s: counts %s, fibers %s", self.base.label,
                    "equal" if report.counts_ok else "differ", "flat" if report.fiber_ok else "growing")
        return report

    def sample_points(self, count: int, seed: Optional[int] = None) -> List[BiInfinitePoint]:
        """Points of the extension that carry a random admissible word on [0, 7]."""
        rng = np.random.default_rng(settings.SEED if seed is None else seed)
        language = block_language(self.extension)
        base = reference_point(self.extension)
        words = self.extension.language(max(8, self.extension.step))
        picks = rng.choice(len(words), size=count, replace=True)
        return [language.point_through(base, 0, words[i]) for i in picks]


def natural_extension(s: Subshift) -> NaturalExtensionSystem:
    """
    Raises:
        NotSurjective: if some word of the one-sided shift has no predecessor.
    """
    one_sided = Subshift(s.alphabet, s.forbidden, s.mixing, True, s.name)
    vertices, adjacency = one_sided.forward_graph
    if not vertices:
        raise NotSurjective(f"{s.label} is empty")
    if one_sided.forbidden and not (np.asarray(adjacency).sum(axis=0) > 0).all():
        raise NotSurjective(f"one-sided {s.label} is not onto: some word has no predecessor")
    return NaturalExtensionSystem(one_sided, s.as_two_sided())


@dataclass(frozen=True)
class AugmentedSystem:
    """
    X x {0} ∪ X x {1/k : k >= 1} with T'(x, 1/k) = (x, 1/(k-1)) for k >= 2,
    T'(x, 1) = (Tx, 1) and level 0 frozen.

    Census brackets at (n, 2^-m): level 1 alone is a lower bound; levels
    1..n+2^m each spanned by their own window classes, plus one frozen class
    per base window for everything closer to level 0, span the whole space.
    """

    base: Subshift

    def level_count(self, k: int, n: int, m: int) -> int:
        """Window classes of level 1/k over n steps: T acts n-k+1 times."""
        return self.base.language_count(separation_window(max(n - k + 1, 1), m).length)

    def counts(self, n: int, m: int) -> Tuple[int, int]:
        if n < 1 or m < 1:
            raise PreconditionError("augmented counts need n >= 1 and m >= 1")
        lower = self.level_count(1, n, m)
        levels = n + 2 ** m
        upper = sum(self.level_count(k, n, m) for k in range(1, levels + 1)) + self.level_count(n + 1, n, m)
        return lower, upper

    def estimate(self, m: int, n_max: Optional[int] = None) -> EntropyEstimate:
        n_max = max(n_max or settings.N_MAX, 4 * m)
        pairs = [self.counts(n, m) for n in range(1, n_max + 1)]
        low = max(slope([p[0] for p in pairs]), 0.0)
        high = max(slope([p[1] for p in pairs]), 0.0)
        low, high = min(low, high), max(low, high)
        return EntropyEstimate(low, low, high, m, n_max, "augmented", tuple(p[1] for p in pairs))

    def level_one(self) -> SubshiftSet:
        """The copy of X at level 1, where T acts."""
        return SubshiftSet(self.base)


def surjective_augmentation(system: Subshift) -> AugmentedSystem:
    if not isinstance(system, Subshift):
        raise PreconditionError("only subshifts can be augmented")
    if system.is_empty:
        raise PreconditionError(f"{system.label} is empty")
    return AugmentedSystem(system)
