"""
Separated counts, growth estimates and subshift entropy.

Under the dyadic shift metric a maximal (n, 2^-m)-separated subset picks
one point per window class on ``separation_window(n, m)``, and the same
classes are the d_n-balls of radius 2^-m, so the minimal spanning count
is the same number. Everything here is therefore a census.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.config import settings
from app.core.errors import HorizonTooSmall, HypothesisViolated, NotOneStep, PreconditionError, ResolutionTooCoarse
from app.core.fan import APEX, FanPoint, FanSet, fan_apex_family, fan_phi_set, fan_separated_count
from app.core.subsets import (
    FinitePointSet,
    LeftFreeCylinder,
    SubsetRep,
    SubshiftSet,
    UnionSet,
    census,
)
from app.core.symbolic import BiInfinitePoint, Subshift, separation_window

logger = logging.getLogger(__name__)

AnySet = Union[SubsetRep, FanSet]


@dataclass(frozen=True)
class EntropyEstimate:
    """Value and brackets in nats; the empty set is -inf throughout."""

    value: float
    lower: float
    upper: float
    m: int
    n_max: int
    tag: str
    counts: Tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.lower <= self.value <= self.upper:
            raise PreconditionError(f"inconsistent bracket {self.lower} <= {self.value} <= {self.upper}")


def is_empty(K: AnySet) -> bool:
    return K.is_empty


def separated_count(K: AnySet, n: int, m: int) -> int:
    """
    Exact s_n(d, T, 2^-m, K), which equals r_n(d, T, 2^-m, K).

    Args:
        K: A subset of a subshift or of the fan.
        n: Horizon.
        m: Resolution exponent.
    """
    if isinstance(K, FanSet):
        return fan_separated_count(K, n, m)
    return census(K, separation_window(n, m)).count


def growth_table(K: AnySet, m: int, n_max: int) -> List[int]:
    """s_1 .. s_{n_max} at resolution m."""
    return [separated_count(K, n, m) for n in range(1, n_max + 1)]


def slope(counts: Sequence[int]) -> float:
    """
    Limsup surrogate of (1/n) log s_n from s_1..s_N.

    Two readings over the top half of horizons: difference quotients
    anchored at N/2, which drop the constant factor the window margins
    contribute, and (1/n) log s_n itself, which follows staircase counts
    whose stages span geometric ranges of n. The smaller one is returned.
    """
    if not counts or counts[-1] == 0:
        return -math.inf
    start = len(counts) // 2
    base = math.log(counts[start - 1]) if start >= 1 else 0.0
    top = range(start + 1, len(counts) + 1)
    differenced = max((math.log(counts[n - 1]) - base) / (n - start) for n in top)
    direct = max(math.log(counts[n - 1]) / n for n in top)
    return min(differenced, direct)


def growth_estimate(K: AnySet, m: int, n_max: int) -> EntropyEstimate:
    """
    Estimate h(T, K) at resolution 2^-m from separated counts up to ``n_max``.

    The upper bracket is rigorous only for a whole subshift, whose language
    counts are submultiplicative; elsewhere it is +inf and the estimate is
    tagged heuristic.

    Raises:
        HorizonTooSmall: if n_max < 4m.
    """
    if m < 1:
        raise PreconditionError("resolution must be at least 1")
    if n_max < 4 * m:
        raise HorizonTooSmall(f"horizon {n_max} is below 4m = {4 * m}")
    if is_empty(K):
        return EntropyEstimate(-math.inf, -math.inf, -math.inf, m, n_max, "empty", tuple([0] * n_max))
    counts = growth_table(K, m, n_max)
    value = max(slope(counts), 0.0)
    if isinstance(K, SubshiftSet):
        upper = min(math.log(c) / (n + 2 * m - 2) for n, c in enumerate(counts, start=1))
        value = min(value, upper)
        tag = "language"
    else:
        upper = math.inf
        tag = "heuristic"
    logger.debug("growth estimate %s at m=%d n_max=%d: %.6f", tag, m, n_max, value)
    return EntropyEstimate(value, value, upper, m, n_max, tag, tuple(counts))


def sft_entropy_exact(s: Subshift, tol: Optional[float] = None, max_iter: int = 100000) -> float:
    """
    Topological entropy of a one-step subshift: log of the spectral radius
    of its essential transition matrix.

    Power iteration runs on A + I, which is primitive whenever A is
    irreducible; the Collatz-Wielandt ratios bracket the radius and stop the
    iteration once they agree to ``tol``.

    Raises:
        NotOneStep: if a forbidden word is longer than 2; re-block with
            ``higher_block`` first.
    """
    tol = settings.POWER_TOL if tol is None else tol
    if not s.is_one_step:
        raise NotOneStep(f"{s.label} has forbidden words of length {s.max_forbidden_len}")
    if not s.forbidden:
        return math.log(s.alphabet)
    vertices, adjacency = s.essential_graph
    if not vertices:
        return -math.inf
    shifted = adjacency.astype(float) + np.eye(len(vertices))
    x = np.ones(len(vertices))
    low, high = 1.0, float(shifted.sum(axis=1).max())
    for _ in range(max_iter):
        y = shifted @ x
        ratios = y / x
        low, high = float(ratios.min()), float(ratios.max())
        if high - low <= tol * low:
            break
        x = y / np.linalg.norm(y)
    else:
        logger.warning("power iteration on %s did not settle, falling back to eigvals", s.label)
        radius = float(np.max(np.abs(np.linalg.eigvals(adjacency.astype(float)))))
        return math.log(radius) if radius > 0 else -math.inf
    radius = (low + high) / 2 - 1.0
    return math.log(radius) if radius > 0 else -math.inf


def entropy_single_resolution(
    K: AnySet,
    s: Subshift,
    m: int,
    n_max: Optional[int] = None,
    allow_coarse: bool = False,
) -> EntropyEstimate:
    """
    h(T, K) read off one resolution.

    Every delta < 1 is an expansive constant of a two-sided subshift, so any
    2^-m <= delta/2 with m >= 2 gives the entropy without refining further.
    """
    if m < 2 and not allow_coarse:
        raise ResolutionTooCoarse(f"resolution 2^-{m} exceeds half an expansive constant of {s.label}")
    n_max = max(n_max or settings.N_MAX, 4 * m)
    estimate = growth_estimate(K, m, n_max)
    tag = "exact-resolution" if estimate.tag != "empty" else "empty"
    return EntropyEstimate(estimate.value, estimate.lower, estimate.upper, m, n_max, tag, estimate.counts)


def phi_set(x: Union[BiInfinitePoint, FanPoint], m: int, system: Union[Subshift, str]) -> AnySet:
    """
    Phi at 2^-m: the points forward-tracking x within 2^-m.

    In a subshift this is {y : y_j = x_j for j >= 1-m}.
    """
    if isinstance(x, FanPoint):
        return fan_phi_set(x, m)
    if not isinstance(system, Subshift):
        raise PreconditionError("a shift point needs a subshift as its system")
    return LeftFreeCylinder(system, 1 - m, x)


def reference_point(s: Subshift) -> BiInfinitePoint:
    for a in range(s.alphabet):
        p = BiInfinitePoint.constant(a)
        if s.is_admissible(p) and s.extends((a,) * (s.step + 1)):
            return p
    for period in s.language(s.step + 1):
        p = BiInfinitePoint.periodic(period)
        if s.is_admissible(p):
            return p
    raise PreconditionError(f"{s.label} has no short periodic point")


def h_star_profile(
    system: Union[Subshift, str],
    m_list: Sequence[int],
    n_max: Optional[int] = None,
    point: Optional[BiInfinitePoint] = None,
) -> List[Tuple[int, EntropyEstimate]]:
    """
    Tail entropy sup_x h(T, Phi_{2^-m}(x)) per resolution.

    For a subshift every Phi set is a left-free cylinder whose census on
    finer windows does not grow with n, so the profile is 0 and tagged
    exact. For the fan the apex Phi set contains whole balls and the
    profile sits at log 2.
    """
    profile = []
    for m in m_list:
        if isinstance(system, Subshift):
            x = point or reference_point(system)
            fine = m + 2
            horizon = max(n_max or settings.N_MAX, 4 * fine)
            measured = growth_estimate(phi_set(x, m, system), fine, horizon)
            if measured.value > 0:
                raise PreconditionError(f"tracking set of {x} grows at m={m}")
            estimate = EntropyEstimate(0.0, 0.0, 0.0, m, horizon, "exact", measured.counts)
        else:
            fine = m + 3
            horizon = max(n_max or settings.N_MAX, 4 * fine)
            measured = growth_estimate(fan_phi_set(APEX, m), fine, horizon)
            estimate = EntropyEstimate(measured.value, measured.lower, measured.upper, m, horizon, "fan-tail", measured.counts)
        logger.info("h* at 2^-%d: %.6f (%s)", m, estimate.value, estimate.tag)
        profile.append((m, estimate))
    return profile


@dataclass
class UnionReport:
    union: float
    max_side: float
    part_values: List[float]
    reps_value: float
    hypothesis_holds: bool
    tolerance: float
    ok: bool
    addendum_ok: Optional[bool] = None
    notes: List[str] = field(default_factory=list)


def union_check(
    balls: Sequence[SubsetRep],
    x0: Union[BiInfinitePoint, FanPoint],
    reps: Sequence,
    m: int,
    n_max: int,
    tolerance: Optional[float] = None,
    strict: bool = False,
    family: Optional[AnySet] = None,
) -> UnionReport:
    """
    Compare h(T, union of B_n and x0) with max(sup h(T, B_n), h(T, {x_n})).

    In the fan, ``balls[i]`` lives in ball i+1 and ``reps[i]`` is a shift
    point of that ball; every ball is T-invariant with diameter 2^(-i-2), so
    the shrinking-diameter hypothesis holds and equality is checked. In a
    subshift the hypothesis cannot be certified and only the inequality
    union >= max side is asserted.

    ``family`` is a countable set with unique limit x0 inside the union
    (by default the representatives themselves); in the fan its estimate
    must not exceed that of the representatives.

    Raises:
        HypothesisViolated: in a subshift when ``strict`` is set.
    """
    tolerance = settings.ESTIMATE_TOL if tolerance is None else tolerance
    if isinstance(x0, FanPoint):
        if not x0.is_apex:
            raise PreconditionError("the fan balls accumulate at the apex only")
        union_set: AnySet = FanSet(apex=True, parts={i + 1: b for i, b in enumerate(balls)})
        parts: List[AnySet] = [FanSet(apex=False, parts={i + 1: b}) for i, b in enumerate(balls)]
        reps_set: AnySet = fan_apex_family(
            {i + 1: FinitePointSet(frozenset({p}), b.ambient) for i, (p, b) in enumerate(zip(reps, balls))}
        )
        hypothesis = True
    else:
        if not balls:
            raise PreconditionError("union check needs at least one part")
        ambient = balls[0].ambient
        reps_set = FinitePointSet(frozenset(reps) | {x0}, ambient)
        union_set = UnionSet(tuple(balls) + (reps_set,), ambient)
        parts = list(balls)
        hypothesis = False
        if strict:
            raise HypothesisViolated("shrinking diameters cannot be certified inside a subshift")

    union = growth_estimate(union_set, m, n_max).value
    part_values = [growth_estimate(p, m, n_max).value for p in parts]
    reps_value = growth_estimate(reps_set, m, n_max).value
    max_side = max(part_values + [reps_value])
    if hypothesis:
        ok = abs(union - max_side) <= tolerance
        family_value = growth_estimate(family if family is not None else reps_set, m, n_max).value
        addendum_ok = family_value <= reps_value + tolerance
        notes = ["balls are invariant with shrinking diameters"]
    else:
        ok = union >= max_side - tolerance
        addendum_ok = None
        notes = ["hypothesis not certified: only union >= max side is checked"]
    logger.info("union check: union=%.6f max side=%.6f ok=%s", union, max_side, ok)
    return UnionReport(union, max_side, part_values, reps_value, hypothesis, tolerance, ok, addendum_ok, notes)
