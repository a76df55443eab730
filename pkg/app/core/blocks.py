"""
Lexicographic blocks behind a context vertex.

A block of length L is a word that can follow a fixed vertex of the
essential transition graph. Blocks of one length are ranked in
lexicographic order; counts, ranks and prefix censuses of the first N
blocks are read off continuation counts without listing any block.
"""

import logging
from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from app.core.errors import InadmissibleWord, NonConvergence, PreconditionError
from app.core.symbolic import BiInfinitePoint, Subshift, WindowSpec, Word, splice, window_of, word_to_str

logger = logging.getLogger(__name__)


class BlockLanguage:
    """Block counting for one subshift; full shifts use base-k arithmetic."""

    def __init__(self, s: Subshift):
        if s.is_empty:
            raise PreconditionError(f"{s.label} is empty")
        self.s = s
        self.q = s.step
        self.full = not s.forbidden
        self.vertices, adjacency = s.essential_graph
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self._moves: List[List[Tuple[int, int]]] = []
        for v in self.vertices:
            moves = []
            for a in range(s.alphabet):
                w = (v + (a,))[-self.q:]
                j = self.index.get(w)
                if j is not None and adjacency[self.index[v], j]:
                    moves.append((a, j))
            self._moves.append(moves)
        self._adjacency = adjacency.astype(object)
        self._counts: List[np.ndarray] = [np.ones(len(self.vertices), dtype=object)]

    # counting

    def context(self, x0: BiInfinitePoint, b: int) -> int:
        """The vertex spelled by x0 on [b-q+1, b]."""
        word = window_of(x0, WindowSpec(b - self.q + 1, b))
        if word not in self.index:
            raise InadmissibleWord(f"{word_to_str(word)} is not an essential vertex of {self.s.label}")
        return self.index[word]

    def moves(self, v: int) -> List[Tuple[int, int]]:
        return self._moves[v]

    def continuations(self, v: int, t: int) -> int:
        """Number of blocks of length t after vertex v."""
        if t < 0:
            return 0
        if self.full:
            return self.s.alphabet ** t
        while len(self._counts) <= t:
            self._counts.append(self._adjacency.dot(self._counts[-1]))
        return int(self._counts[t][v])

    def rank(self, v: int, block: Sequence[int]) -> int:
        """Number of blocks of the same length smaller than ``block``."""
        block = tuple(block)
        if self.full:
            value = 0
            for a in block:
                value = value * self.s.alphabet + a
            return value
        total, current, rest = 0, v, len(block)
        for a in block:
            rest -= 1
            for symbol, w in self._moves[current]:
                if symbol < a:
                    total += self.continuations(w, rest)
                elif symbol == a:
                    current = w
                    break
            else:
                raise InadmissibleWord(f"{word_to_str(block)} cannot follow vertex {word_to_str(self.vertices[v])}")
        return total

    def unrank(self, v: int, length: int, r: int, j: int = None) -> Word:
        """The first j symbols of the block of rank r (the whole block by default)."""
        j = length if j is None else j
        if not 0 <= r < self.continuations(v, length):
            raise PreconditionError(f"rank {r} is out of range")
        if self.full:
            k = self.s.alphabet
            digits = []
            for _ in range(length):
                r, d = divmod(r, k)
                digits.append(d)
            return tuple(reversed(digits))[:j]
        out, current = [], v
        for pos in range(j):
            rest = length - pos - 1
            for symbol, w in self._moves[current]:
                c = self.continuations(w, rest)
                if r < c:
                    out.append(symbol)
                    current = w
                    break
                r -= c
        return tuple(out)

    def distinct_prefixes(self, v: int, length: int, first: int, j: int) -> int:
        """Number of distinct length-j prefixes among the ``first`` smallest blocks."""
        if first <= 0 or j <= 0:
            return 1 if first > 0 else 0
        if j >= length:
            return first
        if first >= self.continuations(v, length):
            return self.continuations(v, j)
        if self.full:
            return (first - 1) // self.s.alphabet ** (length - j) + 1
        last = self.unrank(v, length, first - 1, j)
        return self.rank(v, last) + 1

    def blocks(self, v: int, length: int) -> Iterator[Word]:
        """All blocks of ``length`` after v, in lexicographic order."""
        stack: List[Tuple[int, Word]] = [(v, ())]
        while stack:
            current, word = stack.pop()
            if len(word) == length:
                yield word
                continue
            for symbol, w in reversed(self._moves[current]):
                stack.append((w, word + (symbol,)))

    # rejoining x0

    def rejoin(self, v: int, x0: BiInfinitePoint, e: int) -> Word:
        """
        Shortest lexicographically least word c such that a block ending in
        vertex v at coordinate e, followed by c, continues as x0.
        """
        q = self.q
        if self.vertices[v] == window_of(x0, WindowSpec(e - q + 1, e)):
            return ()
        frontier: Dict[int, Word] = {v: ()}
        bound = (len(self.vertices) - 1) ** 2 + len(x0.center) + len(x0.right_period) + q + 2
        for step in range(1, bound + 1):
            grown: Dict[int, Word] = {}
            for current in sorted(frontier, key=lambda i: frontier[i]):
                for symbol, w in self._moves[current]:
                    if w not in grown:
                        grown[w] = frontier[current] + (symbol,)
            target = window_of(x0, WindowSpec(e + step - q + 1, e + step))
            j = self.index.get(target)
            if j is not None and j in grown:
                return grown[j]
            frontier = grown
        raise NonConvergence(f"no path of {self.s.label} rejoins {x0} after coordinate {e}")

    def _walk(self, v: int, steps: int) -> Dict[int, Word]:
        """Least path of exactly ``steps`` symbols from v to every vertex it reaches."""
        frontier: Dict[int, Word] = {v: ()}
        for _ in range(steps):
            grown: Dict[int, Word] = {}
            for current in sorted(frontier, key=lambda i: frontier[i]):
                for symbol, w in self._moves[current]:
                    if w not in grown:
                        grown[w] = frontier[current] + (symbol,)
            frontier = grown
        return frontier

    def point_through(self, base: BiInfinitePoint, lo: int, word: Sequence[int]) -> BiInfinitePoint:
        """A point showing ``word`` from coordinate lo on and equal to ``base`` far out."""
        word, q = tuple(word), self.q
        if len(word) < q:
            raise PreconditionError(f"word {word_to_str(word)} is shorter than the vertex length {q}")
        target = self.index.get(word[:q])
        if target is None:
            raise InadmissibleWord(f"{word_to_str(word)} does not start at an essential vertex of {self.s.label}")
        bound = (len(self.vertices) - 1) ** 2 + len(base.center) + len(base.left_period) + q + 2
        for k in range(bound + 1):
            start = lo + q - 1 - k
            paths = self._walk(self.context(base, start), k)
            if target in paths:
                lead = paths[target] + word[q:]
                end = self.end_vertex(target, word[q:])
                tail = self.rejoin(end, base, lo + len(word) - 1)
                return splice(base, start + 1, lead + tail)
        raise NonConvergence(f"no path of {self.s.label} leads from {base} into {word_to_str(word)}")

    def end_vertex(self, v: int, block: Sequence[int]) -> int:
        current = v
        for a in block:
            current = dict(self._moves[current])[a]
        return current


@lru_cache(maxsize=32)
def block_language(s: Subshift) -> BlockLanguage:
    return BlockLanguage(s)
