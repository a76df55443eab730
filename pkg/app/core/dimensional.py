"""
Dimensional (Bowen) entropy of cylinder trees.

Covers are cylinders at coordinate 0 with the one-symbol time-zero
partition as reference cover. A cylinder [w] is weighted by
e^(-lambda * n(w)) where n(w) counts the iterates along which [w] stays in
one 1-cylinder. The optimal cover of a tree is found bottom-up: a node
either pays its own weight or the sum of its children.

At finite depth m(K, lambda, k) is finite and positive, so the critical
exponent is read off as the crossing of m = 1 and reported as a bracket.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import settings
from app.core.entropy import growth_estimate, separated_count
from app.core.errors import DepthMismatch, InadmissibleWord, KExceedsDepth, PreconditionError, ZeroMass
from app.core.measures import ProductMeasure
from app.core.subsets import CylinderTree
from app.core.symbolic import Subshift, Word, word_to_str

logger = logging.getLogger(__name__)

# n for cylinders whose forward orbit is entirely forced
FORCED_CAP = 10 ** 9


def n_value(s: Subshift, word: Sequence[int]) -> int:
    """
    n_{T,alpha}([word]) for a cylinder at coordinate 0.

    Past the end of the word a symbol still counts when the subshift
    forces it, i.e. when the word has a single follower.

    Raises:
        InadmissibleWord: if the word does not occur in ``s``.
    """
    current = tuple(word)
    if not current or not s.extends(current):
        raise InadmissibleWord(f"word {word_to_str(current)} does not occur in {s.label}")
    n = len(current)
    if not s.forbidden and s.alphabet >= 2:
        return n
    q = s.step
    seen = set()
    while True:
        followers = s.followers(current[-q:] if len(current) >= q else current)
        if len(followers) != 1:
            return n
        n += 1
        current = current + (followers[0],)
        state = current[-q:]
        if state in seen:
            return FORCED_CAP
        seen.add(state)


@dataclass(frozen=True)
class TreeLevels:
    """Prefix nodes of a tree, level by level (level d holds the length-d prefixes)."""

    counts: Tuple[int, ...]
    parents: Tuple[np.ndarray, ...]
    n_values: Tuple[np.ndarray, ...]
    prefixes: Tuple[np.ndarray, ...]


@lru_cache(maxsize=64)
def tree_levels(K: CylinderTree) -> TreeLevels:
    if K.base != 0:
        raise PreconditionError("covers are cylinders at coordinate 0; re-base the tree first")
    words = K.matrix
    rows, depth = words.shape
    diff = np.zeros((rows, depth), dtype=bool)
    diff[1:] = words[1:] != words[:-1]
    changed = np.logical_or.accumulate(diff, axis=1)
    counts: List[int] = [1]
    parents: List[np.ndarray] = [np.zeros(0, dtype=np.int64)]
    n_values: List[np.ndarray] = [np.zeros(1, dtype=np.int64)]
    prefixes: List[np.ndarray] = [np.zeros((1, 0), dtype=np.int64)]
    previous_group = np.zeros(rows, dtype=np.int64)
    full = not K.ambient.forbidden and K.ambient.alphabet >= 2
    for d in range(1, depth + 1):
        starts = changed[:, d - 1].copy()
        starts[0] = True
        group = np.cumsum(starts) - 1
        first_rows = np.flatnonzero(starts)
        parents.append(previous_group[first_rows])
        level_prefixes = words[first_rows, :d]
        prefixes.append(level_prefixes)
        if full:
            n_values.append(np.full(len(first_rows), d, dtype=np.int64))
        else:
            n_values.append(np.array([n_value(K.ambient, tuple(p)) for p in level_prefixes], dtype=np.int64))
        counts.append(len(first_rows))
        previous_group = group
    return TreeLevels(tuple(counts), tuple(parents), tuple(n_values), tuple(prefixes))


def _weights(levels: TreeLevels, lam: float, d: int) -> np.ndarray:
    return np.exp(-lam * levels.n_values[d].astype(float))


def m_value(K: CylinderTree, lam: float, k: int, cut_trace: bool = False):
    """
    inf over covers of K by cylinders of length in [k, depth] of sum e^(-lambda n).

    Args:
        K: Tree based at coordinate 0.
        lam: The exponent lambda >= 0.
        k: Minimal cylinder length.
        cut_trace: Also return the number of cut nodes per level of the optimal cover.

    Raises:
        KExceedsDepth: if k > depth.
    """
    if k < 1 or k > K.depth:
        raise KExceedsDepth(f"k={k} is outside [1, {K.depth}]")
    if lam < 0:
        raise PreconditionError("lambda must be non-negative")
    levels = tree_levels(K)
    depth = K.depth
    values = _weights(levels, lam, depth)
    chosen: Dict[int, np.ndarray] = {depth: np.ones(levels.counts[depth], dtype=bool)}
    for d in range(depth - 1, 0, -1):
        sums = np.bincount(levels.parents[d + 1], weights=values, minlength=levels.counts[d])
        if d >= k:
            own = _weights(levels, lam, d)
            chosen[d] = own <= sums
            values = np.minimum(own, sums)
        else:
            chosen[d] = np.zeros(levels.counts[d], dtype=bool)
            values = sums
    total = float(values.sum())
    if not cut_trace:
        return total
    trace: List[int] = []
    active = np.ones(levels.counts[1], dtype=bool)
    for d in range(1, depth + 1):
        if d > 1:
            parent = levels.parents[d]
            active = active_prev[parent] & ~chosen[d - 1][parent]
        trace.append(int((active & chosen[d]).sum()))
        active_prev = active
    return total, trace


def m_value_families(K: CylinderTree, lam: float, k: int) -> float:
    """
    The same infimum over families of cylinders meeting K with n >= k.

    Evaluated top-down on an explicit trie; on full shifts it must agree
    with ``m_value`` exactly.
    """
    if k < 1 or k > K.depth:
        raise KExceedsDepth(f"k={k} is outside [1, {K.depth}]")
    trie: Dict[Word, List[Word]] = {}
    for word in K.words:
        for d in range(1, K.depth + 1):
            children = trie.setdefault(word[:d - 1], [])
            if word[:d] not in children:
                children.append(word[:d])

    def best(node: Word) -> float:
        own = math.exp(-lam * n_value(K.ambient, node)) if node else math.inf
        if len(node) == K.depth:
            return own
        below = sum(best(child) for child in trie[node])
        if node and n_value(K.ambient, node) >= k:
            return min(own, below)
        return below

    return best(())


@dataclass
class DimEntropyResult:
    lambda_low: float
    lambda_high: float
    depth: int
    k_floor: int
    k_trace: List[Tuple[int, float, float]] = field(default_factory=list)
    cut_trace: Optional[List[int]] = None


def _crossing(K: CylinderTree, k: int, tol: float) -> Tuple[float, float]:
    lo, hi = 0.0, math.log(max(K.ambient.alphabet, 2)) + 1.0
    if m_value(K, hi, k) >= 1.0:
        return hi, hi
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if m_value(K, mid, k) >= 1.0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def k_schedule(depth: int) -> List[int]:
    return sorted({1, max(1, depth // 2), depth})


def hB_bisect(K: CylinderTree, tol: Optional[float] = None) -> DimEntropyResult:
    """
    Bracket the crossing of m(K, lambda, k) = 1 for k in {1, depth/2, depth}.

    m is non-decreasing in k, so the crossings increase along the schedule;
    the reported bracket is the k = 1 crossing, which never exceeds any
    (1/n) log of the cover counts. The result is h^B of the depth-D outer
    approximation.
    """
    tol = settings.LAMBDA_TOL if tol is None else tol
    if tol <= 0:
        raise PreconditionError("tolerance must be positive")
    trace = []
    for k in k_schedule(K.depth):
        lo, hi = _crossing(K, k, tol)
        trace.append((k, lo, hi))
        logger.debug("h^B crossing at k=%d: [%.8f, %.8f]", k, lo, hi)
    k_floor, low, high = trace[0]
    _, cuts = m_value(K, high, k_floor, cut_trace=True)
    return DimEntropyResult(low, high, K.depth, k_floor, trace, cuts)


@dataclass
class BridgeReport:
    hB_low: float
    hB_high: float
    cover_slope: float
    separated_slope: float
    growth: float
    ok: bool


def cover_counts(K: CylinderTree, n_max: int) -> List[int]:
    """N(alpha_0^{n-1}, K) for n = 1..n_max: distinct length-n prefixes."""
    return [K.prefix_count(n) for n in range(1, min(n_max, K.depth) + 1)]


def bridge_check(K: CylinderTree, n_max: Optional[int] = None, slack: Optional[float] = None) -> BridgeReport:
    """
    h^B <= cover-count slope <= separated slope at matching depths.

    The cover slope is the minimum of (1/n) log N_n over n. h^B sits below
    it when m(K, lambda, k_floor) < 1 at lambda = cover slope + slack, which
    is decided by one evaluation rather than by the bisection bracket, whose
    upper end may overshoot a crossing that equals the slope. Separated
    counts at resolution 1/2 read the window [0, n-1] and are taken through
    the census; the separated slope is their largest (1/n) log over the top
    half of depths, and the growth estimate may not exceed it.
    """
    slack = settings.MEASURE_SLACK if slack is None else slack
    n_max = min(n_max or K.depth, K.depth)
    hb = hB_bisect(K)
    counts = cover_counts(K, n_max)
    separated = [separated_count(K, n, 1) for n in range(1, n_max + 1)]
    per_n = [math.log(c) / n for n, c in enumerate(counts, start=1)]
    cover_slope = min(per_n)
    separated_slope = max(math.log(s) / n for n, s in enumerate(separated, start=1) if n > len(separated) // 2)
    growth = growth_estimate(K, 1, n_max).value if n_max >= 4 else separated_slope
    below_cover = hb.lambda_low <= cover_slope + slack and m_value(K, cover_slope + slack, hb.k_floor) < 1.0
    ok = below_cover and cover_slope <= separated_slope + slack and growth <= separated_slope + slack
    logger.info("bridge chain %.6f <= %.6f <= %.6f: %s", hb.lambda_high, cover_slope, separated_slope, ok)
    return BridgeReport(hb.lambda_low, hb.lambda_high, cover_slope, separated_slope, growth, ok)


def power_shift(s: Subshift, m: int) -> Tuple[Subshift, List[Word]]:
    """
    The m-th power presentation: symbols are the m-words of ``s``.

    Exact whenever every forbidden word has length at most m + 1.
    """
    blocks = s.language(m)
    index = {w: i for i, w in enumerate(blocks)}
    forbidden = frozenset(
        (index[u], index[v]) for u in blocks for v in blocks if not s.extends(u + v)
    )
    return Subshift(len(blocks), forbidden, name=f"{s.label}^{m}"), blocks


def reblock_tree(K: CylinderTree, m: int) -> CylinderTree:
    """The tree over m-blocks: T^m acting on K."""
    if K.depth % m:
        raise DepthMismatch(f"depth {K.depth} is not divisible by {m}")
    power, blocks = power_shift(K.ambient, m)
    index = {w: i for i, w in enumerate(blocks)}
    words = frozenset(
        tuple(index[word[j:j + m]] for j in range(0, K.depth, m)) for word in K.words
    )
    return CylinderTree(K.base // m, K.depth // m, words, power)


@dataclass
class LawsReport:
    union: float
    parts: List[float]
    union_ok: bool
    power: List[Tuple[float, float]]
    power_ok: bool
    union_exact: bool = False
    power_exact: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def union_excess(self) -> float:
        return self.union - max(self.parts)


def hB_laws_check(parts: Sequence[CylinderTree], m: int, tol: Optional[float] = None) -> LawsReport:
    """
    Union law h^B(union) = max h^B(part) and power law h^B(T^m, K) = m h^B(T, K).

    At finite depth only one half of each law is exact: every cover of the
    union covers each part, and covers by m-blocks are covers by cylinders
    of length divisible by m. Those halves decide ``union_ok`` and
    ``power_ok``; equality is reported in ``union_exact`` and
    ``power_exact`` and is reached when a part already carries the union's
    cover mass (nested unions, full trees).

    Raises:
        DepthMismatch: if the parts are not aligned or the depth is not divisible by m.
    """
    tol = settings.LAMBDA_TOL if tol is None else tol
    if not parts:
        raise PreconditionError("laws check needs at least one tree")
    first = parts[0]
    for part in parts[1:]:
        if (part.base, part.depth, part.ambient) != (first.base, first.depth, first.ambient):
            raise DepthMismatch("trees must share base, depth and ambient subshift")
    if first.depth % m:
        raise DepthMismatch(f"depth {first.depth} is not divisible by {m}")
    union_tree = CylinderTree(first.base, first.depth, frozenset().union(*(p.words for p in parts)), first.ambient)
    union = hB_bisect(union_tree, tol).lambda_low
    values = [hB_bisect(p, tol).lambda_low for p in parts]
    union_ok = union >= max(values) - 2 * tol
    union_exact = abs(union - max(values)) <= 2 * tol
    power = []
    for part, value in zip(parts, values):
        reblocked = hB_bisect(reblock_tree(part, m), tol).lambda_low
        power.append((reblocked, m * value))
    power_ok = all(a >= b - m * 2 * tol for a, b in power)
    power_exact = all(abs(a - b) <= m * 2 * tol for a, b in power)
    notes = []
    if not union_exact:
        notes.append(f"union exceeds the largest part by {union - max(values):.6f} at depth {first.depth}")
    if not power_exact:
        notes.append("re-blocked covers are coarser than the cylinder covers at this depth")
    logger.info("h^B laws: union %.6f vs max %.6f, power ok=%s", union, max(values), power_ok)
    return LawsReport(union, values, union_ok, power, power_ok, union_exact, power_exact, notes)


@dataclass
class MassReport:
    holds: bool
    ok: Optional[bool]
    witness: Optional[str] = None
    constant: Optional[float] = None
    vacuous: bool = False
    estimate: Optional[float] = None
    notes: List[str] = field(default_factory=list)


def _prefix_log_masses(theta: ProductMeasure, K: CylinderTree) -> np.ndarray:
    if theta.alphabet != K.ambient.alphabet:
        raise PreconditionError("measure and tree use different alphabets")
    return theta.prefix_log_masses(K.matrix)


def verify_uniform_mdp(
    theta: ProductMeasure,
    K: CylinderTree,
    c: float,
    d: float,
    slack: Optional[float] = None,
) -> MassReport:
    """
    theta(prefix_n) >= c e^(-n d) for every prefix implies growth <= d.

    Compared in log space. A failing prefix is reported and nothing is
    asserted.
    """
    slack = settings.MEASURE_SLACK if slack is None else slack
    if c <= 0 or d <= 0:
        raise PreconditionError("c and d must be positive")
    logs = _prefix_log_masses(theta, K)
    lengths = np.arange(1, K.depth + 1)
    bound = math.log(c) - lengths * d
    failing = logs < bound[None, :] - slack
    if failing.any():
        row, col = np.argwhere(failing)[0]
        witness = word_to_str(K.matrix[row, :col + 1])
        logger.info("uniform mass hypothesis fails at %s", witness)
        return MassReport(False, None, witness=witness, constant=c)
    estimate = growth_estimate(K, 1, K.depth).value if K.depth >= 4 else 0.0
    ok = estimate <= d + settings.ESTIMATE_TOL
    return MassReport(True, ok, constant=c, estimate=estimate)


def verify_nonuniform_mdp(
    theta: ProductMeasure,
    K: CylinderTree,
    d: float,
    tol: Optional[float] = None,
) -> MassReport:
    """
    theta(prefix_n(x)) <= c e^(-n d) along every branch implies h^B >= d.

    The constant c is the largest ratio observed at this depth; it is
    flagged vacuous when it exceeds e^(d * depth / 2).

    Raises:
        ZeroMass: if the tree carries no theta mass.
    """
    tol = settings.LAMBDA_TOL if tol is None else tol
    if d <= 0:
        raise PreconditionError("d must be positive")
    logs = _prefix_log_masses(theta, K)
    total = float(np.exp(logs[:, -1]).sum())
    if total <= 0:
        raise ZeroMass("the tree has zero mass under the measure")
    lengths = np.arange(1, K.depth + 1)
    log_c = float(np.max(logs + lengths[None, :] * d))
    log_c = max(log_c, 0.0)
    vacuous = log_c > d * K.depth / 2
    hb = hB_bisect(K)
    ok = hb.lambda_high >= d - tol
    notes = []
    if vacuous:
        notes.append("constant exceeds e^(d*depth/2): the hypothesis carries no information at this depth")
    if not ok:
        notes.append(f"hypothesis holds but h^B < d: the tree mass {total:.3g} shrinks with depth")
    logger.info("non-uniform mass check: c=%.4g h^B=[%.6f, %.6f] d=%.4f", math.exp(log_c), hb.lambda_low, hb.lambda_high, d)
    return MassReport(True, ok, constant=math.exp(log_c), vacuous=vacuous, estimate=hb.lambda_low, notes=notes)


def typical_tree(p: float, depth: int, eta: float) -> CylinderTree:
    """Binary words of length ``depth`` whose frequency of 1 is within ``eta`` of ``p``."""
    words = set()
    for ones in range(depth + 1):
        if abs(ones / depth - p) <= eta + 1e-12:
            for positions in itertools.combinations(range(depth), ones):
                word = [0] * depth
                for i in positions:
                    word[i] = 1
                words.add(tuple(word))
    if not words:
        raise PreconditionError("no word of this depth is typical")
    return CylinderTree(0, depth, frozenset(words), Subshift.full(2))


def single_branch(word: Sequence[int], ambient: Optional[Subshift] = None) -> CylinderTree:
    ambient = ambient or Subshift.full(max(word) + 1 if word else 2)
    return CylinderTree(0, len(word), frozenset({tuple(word)}), ambient)


def language_tree(s: Subshift, depth: int) -> CylinderTree:
    return CylinderTree(0, depth, frozenset(s.language(depth)), s)
