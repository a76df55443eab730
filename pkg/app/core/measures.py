"""
Bernoulli and Markov measures on cylinders at coordinate 0.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.core.errors import SchemaError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProductMeasure:
    """
    A shift-invariant measure given by symbol probabilities.

    Bernoulli when ``transition`` is None; otherwise a Markov measure with
    stochastic ``transition`` and stationary ``weights``.
    """

    weights: Tuple[float, ...]
    transition: Optional[Tuple[Tuple[float, ...], ...]] = None

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-12:
            raise SchemaError("probabilities must be non-negative and sum to 1", "weights")
        if self.transition is not None:
            matrix = np.asarray(self.transition, dtype=float)
            if matrix.shape != (len(weights), len(weights)):
                raise SchemaError("transition matrix shape does not match the alphabet", "transition")
            if (matrix < 0).any() or np.abs(matrix.sum(axis=1) - 1.0).max() > 1e-12:
                raise SchemaError("transition rows must be probability vectors", "transition")
            if np.abs(weights @ matrix - weights).max() > 1e-10:
                raise SchemaError("weights are not stationary for the transition matrix", "weights")

    @classmethod
    def bernoulli(cls, probabilities: Sequence[float]) -> "ProductMeasure":
        return cls(tuple(float(p) for p in probabilities))

    @classmethod
    def markov(cls, transition: Sequence[Sequence[float]]) -> "ProductMeasure":
        """Markov measure with the stationary vector computed from ``transition``."""
        matrix = np.asarray(transition, dtype=float)
        values, vectors = np.linalg.eig(matrix.T)
        lead = vectors[:, int(np.argmin(np.abs(values - 1.0)))].real
        stationary = lead / lead.sum()
        return cls(tuple(float(v) for v in stationary), tuple(tuple(float(v) for v in row) for row in matrix))

    @property
    def kind(self) -> str:
        return "bernoulli" if self.transition is None else "markov"

    @property
    def alphabet(self) -> int:
        return len(self.weights)

    def log_mass(self, word: Sequence[int]) -> float:
        """log of the measure of the cylinder [word] at coordinate 0; -inf for null cylinders."""
        if not word:
            return 0.0
        total = _log(self.weights[word[0]])
        for a, b in zip(word, word[1:]):
            step = self.weights[b] if self.transition is None else self.transition[a][b]
            total += _log(step)
        return total

    def mass(self, word: Sequence[int]) -> float:
        return math.exp(self.log_mass(word))

    def prefix_log_masses(self, words: np.ndarray) -> np.ndarray:
        """
        Log masses of every prefix of every row.

        Returns:
            Array of shape (rows, depth) whose column j is the log mass of the length-(j+1) prefix.
        """
        words = np.asarray(words, dtype=np.int64)
        with np.errstate(divide="ignore"):
            log_weights = np.log(np.asarray(self.weights))
            steps = np.empty(words.shape, dtype=float)
            steps[:, 0] = log_weights[words[:, 0]]
            if words.shape[1] > 1:
                if self.transition is None:
                    steps[:, 1:] = log_weights[words[:, 1:]]
                else:
                    log_transition = np.log(np.asarray(self.transition))
                    steps[:, 1:] = log_transition[words[:, :-1], words[:, 1:]]
        return np.cumsum(steps, axis=1)

    def entropy_rate(self) -> float:
        """Measure-theoretic entropy in nats."""
        p = np.asarray(self.weights)
        if self.transition is None:
            nz = p[p > 0]
            return float(-(nz * np.log(nz)).sum())
        matrix = np.asarray(self.transition)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(matrix > 0, matrix * np.log(matrix), 0.0)
        return float(-(p[:, None] * terms).sum())


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def binary_entropy(p: float) -> float:
    return -p * math.log(p) - (1 - p) * math.log(1 - p)
