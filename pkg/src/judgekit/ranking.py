"""Contrastive ranking math: InfoNCE, grouped LCE, hard-negative sampling.

These are standalone verifiable functions, kept free of any model code so
the numbers can be checked against finite differences and closed forms.
Scores are raw relevance values (dot products or reranker logits).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    InsufficientNegativesError,
    MissingScoreError,
    NonFiniteInputError,
    NoPositiveInCandidatesError,
)


@dataclass(frozen=True)
class ScoredCandidate:
    id: str
    score: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise NonFiniteInputError(f"score for {self.id!r} is not finite")


@dataclass(frozen=True)
class NegativeGroup:
    """One training group: a positive id with its sampled hard negatives."""

    positive: str
    negatives: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "negatives", tuple(self.negatives))
        if not self.negatives:
            raise ValueError("negatives must be non-empty")
        if self.positive in self.negatives:
            raise ValueError("positive id cannot appear among negatives")


def _check_finite(values: Iterable[float]) -> None:
    for v in values:
        if not math.isfinite(v):
            raise NonFiniteInputError(f"non-finite score: {v!r}")


def info_nce_loss(pos_score: float, neg_scores: Sequence[float]) -> float:
    """-log softmax probability of the positive, max-shifted for stability.

    With no negatives the normalizer is just the positive itself: loss 0.
    """
    scores = [pos_score, *neg_scores]
    _check_finite(scores)
    if not neg_scores:
        return 0.0
    m = max(scores)
    lse = m + math.log(sum(math.exp(s - m) for s in scores))
    return lse - pos_score


def info_nce_gradient(scores: Sequence[float], pos_index: int) -> list[float]:
    """d loss / d scores = softmax(scores) - onehot(pos_index)."""
    if not 0 <= pos_index < len(scores):
        raise IndexError(f"pos_index {pos_index} out of range for {len(scores)} scores")
    _check_finite(scores)
    m = max(scores)
    exps = [math.exp(s - m) for s in scores]
    z = sum(exps)
    grad = [e / z for e in exps]
    grad[pos_index] -= 1.0
    return grad


def lce_loss(group: NegativeGroup, scores: Mapping[str, float]) -> float:
    """InfoNCE restricted to one group's positive and negatives."""
    for needed in (group.positive, *group.negatives):
        if needed not in scores:
            raise MissingScoreError(needed)
    return info_nce_loss(
        scores[group.positive], [scores[n] for n in group.negatives]
    )


def sample_hard_negatives(
    candidates: Sequence[ScoredCandidate],
    gold: set[str],
    n: int,
    seed: int,
) -> NegativeGroup:
    """Build a training group from a ranked candidate list.

    The input order is the ranking: the positive is the highest-ranked gold
    id; negatives are drawn without replacement from the non-gold candidates
    with a generator seeded for repeatability.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    positive = next((c.id for c in candidates if c.id in gold), None)
    if positive is None:
        raise NoPositiveInCandidatesError("no gold id among candidates")
    pool: list[str] = []
    seen: set[str] = set()
    for c in candidates:
        if c.id not in gold and c.id not in seen:
            pool.append(c.id)
            seen.add(c.id)
    if len(pool) < n:
        raise InsufficientNegativesError(
            f"need {n} negatives, only {len(pool)} available"
        )
    rng = random.Random(seed)
    return NegativeGroup(positive=positive, negatives=tuple(rng.sample(pool, n)))
