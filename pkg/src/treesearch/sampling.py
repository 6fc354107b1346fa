"""Leaf selection and top-k token filtering."""

from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

from .lm import TokenDistribution
from .scoring import ConfidenceScore

_MASK64 = (1 << 64) - 1


class Rng:
    """SplitMix64 generator.

    Pure integer arithmetic, so a seed yields the same stream everywhere.
    ``random()`` takes the top 53 bits of each output as a float in [0, 1).
    """

    def __init__(self, seed: int = 0):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


class SamplerKind(str, enum.Enum):
    NORMALIZED_CONFIDENCE = "normalized_confidence"
    TOP_K_LEAVES = "top_k_leaves"
    HYBRID = "hybrid"


def normalize_weights(scores: Sequence[float]) -> list[float]:
    if len(scores) == 0:
        raise ValueError("cannot normalize an empty score list")
    for s in scores:
        if math.isnan(s) or s < 0:
            raise ValueError(f"scores must be non-negative, got {s!r}")
    total = math.fsum(scores)
    if total == 0.0:
        return [1.0 / len(scores)] * len(scores)
    return [s / total for s in scores]


class _Fenwick:
    """Prefix sums with point updates and prefix search."""

    def __init__(self, values: Sequence[float]):
        n = len(values)
        self.n = n
        tree = [0.0] * (n + 1)
        for i, v in enumerate(values, 1):
            tree[i] += v
            j = i + (i & -i)
            if j <= n:
                tree[j] += tree[i]
        self.tree = tree
        self.top = 1 << (n.bit_length() - 1) if n else 0

    def add(self, i: int, delta: float) -> None:
        i += 1
        tree, n = self.tree, self.n
        while i <= n:
            tree[i] += delta
            i += i & -i

    def search(self, target: float) -> int:
        """Smallest index whose inclusive prefix sum exceeds ``target``."""
        pos, step, tree, n = 0, self.top, self.tree, self.n
        while step:
            nxt = pos + step
            if nxt <= n and tree[nxt] <= target:
                pos = nxt
                target -= tree[nxt]
            step >>= 1
        return pos


def weighted_sample_without_replacement(weights: Sequence[float], count: int, rng: Rng) -> list[int]:
    """Draw ``count`` distinct indices, each step proportional to remaining weight.

    Each draw maps ``u = rng.random()`` to the index whose cumulative-weight
    interval contains ``u * remaining_total``, then removes it. When only
    zero-weight items remain the draw is uniform over them.
    """
    n = len(weights)
    count = min(count, n)
    w = [float(x) for x in weights]
    mass = _Fenwick(w)
    alive = _Fenwick([1.0] * n)
    positive = sum(1 for x in w if x > 0)
    taken = [False] * n
    out: list[int] = []
    for drawn in range(count):
        u = rng.random()
        if positive:
            total = _total(mass)
            idx = mass.search(u * total)
            if idx >= n or taken[idx] or w[idx] <= 0:
                idx = _nearest_positive(w, taken, min(idx, n - 1))
            positive -= 1
            mass.add(idx, -w[idx])
        else:
            idx = alive.search(math.floor(u * (n - drawn)))
        taken[idx] = True
        alive.add(idx, -1.0)
        out.append(idx)
    return out


def _total(f: _Fenwick) -> float:
    total, i = 0.0, f.n
    while i > 0:
        total += f.tree[i]
        i -= i & -i
    return total


def _nearest_positive(w: Sequence[float], taken: Sequence[bool], start: int) -> int:
    # rounding in the prefix sums can land just past the last live item
    for i in range(start, -1, -1):
        if not taken[i] and w[i] > 0:
            return i
    for i in range(start + 1, len(w)):
        if not taken[i] and w[i] > 0:
            return i
    raise RuntimeError("no positive weight left")


def _rank_by_score(leaves: Sequence[tuple[int, ConfidenceScore]]) -> list[tuple[int, ConfidenceScore]]:
    return sorted(leaves, key=lambda item: (-item[1].log_value, item[0]))


def _relative_weights(leaves: Sequence[tuple[int, ConfidenceScore]]) -> list[float]:
    # proportional to the linear scores, shifted in log space so deep paths do not underflow
    top = max(s.log_value for _, s in leaves)
    if top == -math.inf:
        return [0.0] * len(leaves)
    return [math.exp(s.log_value - top) for _, s in leaves]


def sample_leaves(
    kind: SamplerKind | str,
    leaves: Sequence[tuple[int, ConfidenceScore]],
    batch: int,
    rng: Rng,
    hybrid_pool_factor: int = 2,
) -> list[int]:
    """Choose ``min(batch, len(leaves))`` distinct leaf ids to extend."""
    kind = SamplerKind(kind)
    if not leaves:
        raise ValueError("no leaves to sample from")
    if batch < 1:
        raise ValueError("batch must be >= 1")
    if kind is SamplerKind.TOP_K_LEAVES:
        return [node for node, _ in _rank_by_score(leaves)[:batch]]
    if kind is SamplerKind.HYBRID:
        if hybrid_pool_factor < 1:
            raise ValueError("hybrid_pool_factor must be >= 1")
        pool = _rank_by_score(leaves)[: hybrid_pool_factor * batch]
        # keep id order inside the pool so draws do not depend on the ranking sort
        leaves = sorted(pool, key=lambda item: item[0])
    picks = weighted_sample_without_replacement(_relative_weights(leaves), batch, rng)
    return [leaves[i][0] for i in picks]


def top_k_tokens(dist: TokenDistribution | Sequence[float], k: int) -> list[tuple[int, float]]:
    """The ``k`` most probable tokens, descending, ties broken by lower id."""
    probs = dist.probs if isinstance(dist, TokenDistribution) else np.asarray(dist, dtype=np.float64)
    if not 1 <= k <= probs.size:
        raise ValueError(f"k must be in [1, {probs.size}], got {k}")
    order = np.argsort(-probs, kind="stable")[:k]
    return [(int(i), float(probs[i])) for i in order]
