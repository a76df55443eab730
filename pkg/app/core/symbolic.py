"""
Words, finitely described bi-infinite points, subshifts and metric windows.

The shift metric is d(x, y) = 2^(-min{|i| : x_i != y_i}). At dyadic
resolution 2^(-m) every metric statement about Bowen balls becomes a
statement about agreement on a coordinate window; ``separation_window`` and
``ball_window`` are that dictionary.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import NotMixing, PreconditionError, SchemaError

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def word_from_str(text: str) -> Word:
    """Parse a base-36 word such as ``"0110"``."""
    try:
        return tuple(int(ch, 36) for ch in text)
    except ValueError:
        raise SchemaError(f"invalid symbol in word {text!r}")


def word_to_str(word: Sequence[int]) -> str:
    return "".join(DIGITS[s] for s in word)


def _primitive(word: Word) -> Word:
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word[:d] * (n // d) == word:
            return word[:d]
    return word


def _rotate_right(word: Word) -> Word:
    return word[-1:] + word[:-1]


def _rotate_left(word: Word) -> Word:
    return word[1:] + word[:1]


@dataclass(frozen=True)
class WindowSpec:
    """Coordinates ``lo..hi`` inclusive."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise PreconditionError(f"empty window [{self.lo}, {self.hi}]")

    @property
    def length(self) -> int:
        return self.hi - self.lo + 1

    def contains(self, other: "WindowSpec") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def shifted(self, t: int) -> "WindowSpec":
        return WindowSpec(self.lo + t, self.hi + t)

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.lo, self.hi + 1))


def separation_window(n: int, m: int) -> WindowSpec:
    """
    The window deciding (n, 2^-m)-separation.

    d_n(x, y) > 2^-m exactly when x and y differ somewhere on [1-m, n+m-2].

    Args:
        n: Horizon, number of iterates.
        m: Dyadic resolution exponent.

    Returns:
        The window [1-m, n+m-2].
    """
    if n < 1 or m < 1:
        raise PreconditionError(f"separation window needs n >= 1 and m >= 1, got n={n}, m={m}")
    return WindowSpec(1 - m, n + m - 2)


def ball_window(l: int, m: int) -> WindowSpec:
    """
    The window of the open Bowen ball B_{d_l}(x, 2^-m).

    d_l(x, y) < 2^-m exactly when x and y agree on [-m, l-1+m].
    """
    if l < 1 or m < 1:
        raise PreconditionError(f"ball window needs l >= 1 and m >= 1, got l={l}, m={m}")
    return WindowSpec(-m, l - 1 + m)


@dataclass(frozen=True)
class BiInfinitePoint:
    """
    A doubly eventually periodic sequence ``...lp lp center rp rp...``.

    ``anchor`` is the coordinate of the first center symbol, or of the first
    right-period symbol when the center is empty. Instances are always stored
    in canonical form, so ``==`` is equality of sequences.
    """

    left_period: Word
    center: Word
    right_period: Word
    anchor: int = 0

    def __post_init__(self):
        lp, c, rp = tuple(self.left_period), tuple(self.center), tuple(self.right_period)
        if not lp or not rp:
            raise SchemaError("periods must be non-empty")
        if any(s < 0 for s in lp + c + rp):
            raise SchemaError("symbols must be non-negative")
        lp, c, rp, anchor = _canonical(lp, c, rp, self.anchor)
        object.__setattr__(self, "left_period", lp)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "right_period", rp)
        object.__setattr__(self, "anchor", anchor)

    @classmethod
    def constant(cls, symbol: int) -> "BiInfinitePoint":
        return cls((symbol,), (), (symbol,), 0)

    @classmethod
    def periodic(cls, period: Word) -> "BiInfinitePoint":
        return cls(tuple(period), (), tuple(period), 0)

    @classmethod
    def parse(cls, literal: str) -> "BiInfinitePoint":
        """Parse ``lp.center.rp@anchor``; the anchor defaults to 0."""
        body, _, anchor = literal.strip().partition("@")
        parts = body.split(".")
        if len(parts) != 3:
            raise SchemaError(f"point literal needs three dot-separated parts: {literal!r}")
        try:
            offset = int(anchor) if anchor else 0
        except ValueError:
            raise SchemaError(f"invalid anchor in {literal!r}")
        return cls(word_from_str(parts[0]), word_from_str(parts[1]), word_from_str(parts[2]), offset)

    def literal(self) -> str:
        return (
            f"{word_to_str(self.left_period)}.{word_to_str(self.center)}."
            f"{word_to_str(self.right_period)}@{self.anchor}"
        )

    def __str__(self) -> str:
        return self.literal()

    @property
    def is_periodic(self) -> bool:
        return not self.center and self.left_period == self.right_period

    @property
    def max_symbol(self) -> int:
        return max(self.left_period + self.center + self.right_period)

    @property
    def core(self) -> WindowSpec:
        """Coordinates spanned by the center (a single coordinate when it is empty)."""
        return WindowSpec(self.anchor, self.anchor + max(len(self.center), 1) - 1)

    def symbol_at(self, i: int) -> int:
        start = self.anchor + len(self.center)
        if i < self.anchor:
            return self.left_period[(i - self.anchor) % len(self.left_period)]
        if i < start:
            return self.center[i - self.anchor]
        return self.right_period[(i - start) % len(self.right_period)]

    def sort_key(self) -> Tuple:
        return (self.anchor, self.left_period, self.center, self.right_period)


def _canonical(lp: Word, c: Word, rp: Word, anchor: int) -> Tuple[Word, Word, Word, int]:
    lp, rp = _primitive(lp), _primitive(rp)
    while c and c[-1] == rp[-1]:
        rp = _rotate_right(rp)
        c = c[:-1]
    while c and c[0] == lp[0]:
        lp = _rotate_left(lp)
        c = c[1:]
        anchor += 1
    if c:
        return lp, c, rp, anchor
    if lp == rp:
        size = len(rp)
        period = tuple(rp[(i - anchor) % size] for i in range(size))
        return period, (), period, 0
    # push the tail boundary to the first coordinate where the right period holds
    for _ in range(len(lp) * len(rp)):
        if lp[-1] != rp[-1]:
            break
        lp, rp = _rotate_right(lp), _rotate_right(rp)
        anchor -= 1
    return lp, c, rp, anchor


def shift_by(p: BiInfinitePoint, t: int) -> BiInfinitePoint:
    """Return q with q_i = p_{i+t}."""
    return BiInfinitePoint(p.left_period, p.center, p.right_period, p.anchor - t)


def window_of(p: BiInfinitePoint, w: WindowSpec) -> Word:
    return tuple(p.symbol_at(i) for i in range(w.lo, w.hi + 1))


def splice(p: BiInfinitePoint, lo: int, block: Sequence[int]) -> BiInfinitePoint:
    """The point equal to ``block`` on [lo, lo+len(block)-1] and to p elsewhere."""
    if not block:
        return p
    hi = lo + len(block) - 1
    start = min(lo, p.anchor)
    end = max(hi, p.anchor + len(p.center) - 1)
    center = tuple(block[i - lo] if lo <= i <= hi else p.symbol_at(i) for i in range(start, end + 1))
    lp = tuple(p.symbol_at(start - len(p.left_period) + k) for k in range(len(p.left_period)))
    rp = tuple(p.symbol_at(end + 1 + k) for k in range(len(p.right_period)))
    return BiInfinitePoint(lp, center, rp, start)


def shift_distance(x: BiInfinitePoint, y: BiInfinitePoint) -> Fraction:
    """d(x, y) = 2^(-min{|i| : x_i != y_i}), exactly."""
    if x == y:
        return Fraction(0)
    reach = max(abs(x.anchor), abs(y.anchor)) + sum(len(p.center) + len(p.left_period) + len(p.right_period) for p in (x, y))
    for r in range(reach + 1):
        if x.symbol_at(r) != y.symbol_at(r) or x.symbol_at(-r) != y.symbol_at(-r):
            return Fraction(1, 2 ** r)
    raise AssertionError("distinct eventually periodic points must differ near their cores")


def bowen_distance(x: BiInfinitePoint, y: BiInfinitePoint, n: int) -> Fraction:
    """d_n(x, y) = max over 0 <= i < n of d(T^i x, T^i y)."""
    return max(shift_distance(shift_by(x, i), shift_by(y, i)) for i in range(n))


@dataclass(frozen=True)
class Subshift:
    """
    A two-sided subshift of finite type over symbols ``0..alphabet-1``.

    ``forbidden`` empty means the full shift. ``mixing`` asserts that the
    essential transition graph is primitive; it is checked on construction.
    ``one_sided`` marks the one-sided shift on the same forbidden words.
    """

    alphabet: int
    forbidden: FrozenSet[Word] = frozenset()
    mixing: bool = field(default=False, compare=False)
    one_sided: bool = False
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.alphabet < 1:
            raise SchemaError("alphabet size must be at least 1", "alphabet")
        words = frozenset(tuple(w) for w in self.forbidden)
        for w in words:
            if not w:
                raise SchemaError("forbidden words must be non-empty", "forbidden")
            if any(s < 0 or s >= self.alphabet for s in w):
                raise SchemaError(f"symbol out of range in forbidden word {word_to_str(w)}", "forbidden")
        object.__setattr__(self, "forbidden", words)
        if self.mixing and not self.is_primitive():
            raise NotMixing(f"subshift {self.label} is flagged mixing but its transition graph is not primitive")

    @classmethod
    def full(cls, k: int) -> "Subshift":
        return cls(k, frozenset(), mixing=k >= 1, name=f"full-{k}")

    @classmethod
    def golden_mean(cls) -> "Subshift":
        return cls(2, frozenset({(1, 1)}), mixing=True, name="golden-mean")

    @property
    def label(self) -> str:
        return self.name or f"sft(k={self.alphabet}, forbidden={sorted(word_to_str(w) for w in self.forbidden)})"

    @property
    def mode(self) -> str:
        return "full" if not self.forbidden else "sft"

    @property
    def max_forbidden_len(self) -> int:
        return max((len(w) for w in self.forbidden), default=0)

    @property
    def is_one_step(self) -> bool:
        return self.max_forbidden_len <= 2

    @property
    def step(self) -> int:
        """Vertex word length of the transition graph."""
        return max(1, self.max_forbidden_len - 1)

    @cached_property
    def _forbidden_by_length(self) -> Dict[int, FrozenSet[Word]]:
        lengths: Dict[int, set] = {}
        for w in self.forbidden:
            lengths.setdefault(len(w), set()).add(w)
        return {n: frozenset(ws) for n, ws in lengths.items()}

    def word_admissible(self, word: Sequence[int]) -> bool:
        word = tuple(word)
        if any(s < 0 or s >= self.alphabet for s in word):
            return False
        for n, ws in self._forbidden_by_length.items():
            for i in range(len(word) - n + 1):
                if word[i:i + n] in ws:
                    return False
        return True

    def is_admissible(self, x: Union[Sequence[int], BiInfinitePoint]) -> bool:
        """
        True iff no forbidden word occurs in ``x``.

        For a point it suffices to scan the center plus one full period of
        each tail, padded by the longest forbidden word.
        """
        if not isinstance(x, BiInfinitePoint):
            return self.word_admissible(x)
        margin = self.max_forbidden_len
        lo = x.anchor - len(x.left_period) - margin
        hi = x.anchor + len(x.center) + len(x.right_period) + margin
        return self.word_admissible(window_of(x, WindowSpec(lo, hi)))

    # transition graph

    @cached_property
    def _graph_vertices(self) -> List[Word]:
        q = self.step
        words: List[Word] = [()]
        for _ in range(q):
            words = [w + (a,) for w in words for a in range(self.alphabet) if self.word_admissible(w + (a,))]
        return words

    def _trimmed(self, sources: bool) -> Tuple[List[Word], np.ndarray]:
        vertices = self._graph_vertices
        index = {v: i for i, v in enumerate(vertices)}
        size = len(vertices)
        adjacency = np.zeros((size, size), dtype=np.int64)
        for v in vertices:
            for a in range(self.alphabet):
                if self.word_admissible(v + (a,)):
                    adjacency[index[v], index[v[1:] + (a,)]] = 1
        alive = np.ones(size, dtype=bool)
        while True:
            sub = adjacency[np.ix_(alive, alive)]
            keep = sub.sum(axis=1) > 0
            if sources:
                keep &= sub.sum(axis=0) > 0
            if keep.all():
                break
            alive[np.flatnonzero(alive)[~keep]] = False
        kept = [v for v, ok in zip(vertices, alive) if ok]
        return kept, adjacency[np.ix_(alive, alive)]

    @cached_property
    def essential_graph(self) -> Tuple[List[Word], np.ndarray]:
        """Vertices (admissible step-words) and 0/1 adjacency, trimmed of sources and sinks."""
        return self._trimmed(sources=True)

    @cached_property
    def forward_graph(self) -> Tuple[List[Word], np.ndarray]:
        """Transition graph trimmed of sinks only: the one-sided language."""
        return self._trimmed(sources=False)

    @property
    def is_empty(self) -> bool:
        return not self.essential_graph[0]

    def is_primitive(self) -> bool:
        vertices, adjacency = self.essential_graph
        size = len(vertices)
        if size == 0:
            return False
        reach = (adjacency > 0).astype(np.int64)
        power = np.eye(size, dtype=np.int64)
        # Wielandt bound for primitive matrices
        for _ in range((size - 1) ** 2 + 1):
            power = np.minimum(power @ reach, 1)
        return bool((power > 0).all())

    def language_count(self, n: int, one_sided: Optional[bool] = None) -> int:
        """
        Number of n-words occurring in points of the subshift.

        With ``one_sided`` the count is over words extending to the right only,
        i.e. the language of the one-sided shift.
        """
        if n < 0:
            raise PreconditionError("word length must be non-negative")
        if n == 0:
            return 0 if self.is_empty else 1
        if not self.forbidden:
            return self.alphabet ** n
        forward = self.one_sided if one_sided is None else one_sided
        vertices, adjacency = self.forward_graph if forward else self.essential_graph
        q = self.step
        if n < q:
            return len({v[:n] for v in vertices})
        matrix = adjacency.astype(object)
        counts = np.ones(len(vertices), dtype=object)
        for _ in range(n - q):
            counts = matrix @ counts
        return int(sum(counts))

    def language(self, n: int, one_sided: Optional[bool] = None) -> List[Word]:
        """The n-words of the language, in lexicographic order."""
        if n <= 0:
            return [] if self.is_empty else [()]
        forward = self.one_sided if one_sided is None else one_sided
        vertices, adjacency = self.forward_graph if forward else self.essential_graph
        q = self.step
        if n <= q:
            return sorted({v[:n] for v in vertices})
        index = {v: i for i, v in enumerate(vertices)}
        words = [(v, index[v]) for v in vertices]
        for _ in range(n - q):
            words = [
                (w + (vertices[j][-1],), j)
                for w, i in words
                for j in np.flatnonzero(adjacency[i])
            ]
        return sorted(w for w, _ in words)

    def extends(self, word: Sequence[int], one_sided: Optional[bool] = None) -> bool:
        """True iff ``word`` occurs in some point of the subshift."""
        word = tuple(word)
        if not self.word_admissible(word):
            return False
        if not self.forbidden:
            return True
        forward = self.one_sided if one_sided is None else one_sided
        vertices, _ = self.forward_graph if forward else self.essential_graph
        q = self.step
        alive = set(vertices)
        if len(word) < q:
            return any(v[:len(word)] == word for v in alive)
        return all(word[i:i + q] in alive for i in range(len(word) - q + 1))

    def followers(self, word: Sequence[int]) -> List[int]:
        """Symbols a such that word + a still occurs in the subshift."""
        return [a for a in range(self.alphabet) if self.extends(tuple(word) + (a,))]

    def predecessors(self, word: Sequence[int]) -> List[int]:
        return [a for a in range(self.alphabet) if self.extends((a,) + tuple(word))]

    def as_two_sided(self) -> "Subshift":
        return Subshift(self.alphabet, self.forbidden, self.mixing, False, self.name)


def higher_block(s: Subshift, n: Optional[int] = None) -> Tuple[Subshift, List[Word]]:
    """
    The n-block presentation of ``s``.

    Symbols of the result index the essential n-words of ``s``; two blocks
    may follow each other iff they overlap consistently and their union is
    admissible. With n >= longest forbidden word minus one the result is a
    one-step subshift of the same entropy.

    Returns:
        The re-blocked subshift and its block alphabet (symbol i is blocks[i]).
    """
    n = s.step if n is None else n
    if n < 1:
        raise PreconditionError("block length must be at least 1")
    blocks = s.language(n)
    if not blocks:
        raise PreconditionError(f"subshift {s.label} is empty")
    forbidden = set()
    for i, u in enumerate(blocks):
        for j, v in enumerate(blocks):
            if u[1:] != v[:-1] or not s.extends(u + v[-1:]):
                forbidden.add((i, j))
    logger.debug("higher block presentation of %s at n=%d has %d symbols", s.label, n, len(blocks))
    return Subshift(max(len(blocks), 1), frozenset(forbidden), name=f"{s.label}[{n}]"), blocks


def parse_words(items: Iterable[str]) -> List[Word]:
    return [word_from_str(item) for item in items]
