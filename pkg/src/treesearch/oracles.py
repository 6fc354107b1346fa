"""Exhaustive enumeration oracles.

These deliberately avoid the engine and scoring code: they walk every
sequence with plain recursion and compute scores as direct products of
probabilities, so they can be used to check the search routines.
"""

from __future__ import annotations

import math
from typing import Sequence

from .lm import LanguageModel

FLOOR = 1e-12


def enumerate_completions(
    model: LanguageModel, prompt: Sequence[int], max_len: int
) -> list[tuple[tuple[int, ...], tuple[float, ...]]]:
    """Every completion that ends in eos or reaches ``max_len`` tokens.

    Returns ``(generated_tokens, token_probabilities)`` pairs in
    lexicographic token order; probabilities are floored at 1e-12.
    """
    vocab = model.vocabulary
    out = []

    def walk(gen: tuple[int, ...], probs: tuple[float, ...]):
        if len(gen) == max_len or (gen and gen[-1] == vocab.eos_id):
            out.append((gen, probs))
            return
        dist = model.next_distribution(tuple(prompt) + gen)
        for t in range(vocab.size):
            walk(gen + (t,), probs + (max(float(dist[t]), FLOOR),))

    walk((), ())
    return out


def product(probs: Sequence[float]) -> float:
    out = 1.0
    for p in probs:
        out *= p
    return out


def geometric_mean_direct(probs: Sequence[float]) -> float:
    """n-th root of the plain product."""
    if not probs:
        return 1.0
    return product(probs) ** (1.0 / len(probs))


def best_by_total_probability(
    model: LanguageModel, prompt: Sequence[int], max_len: int
) -> tuple[tuple[int, ...], float]:
    """Global optimum of the path probability, ties to the lexicographically smaller sequence."""
    best = None
    for gen, probs in enumerate_completions(model, prompt, max_len):
        # compare in log space so long low-probability paths do not underflow to ties
        value = sum(math.log(p) for p in probs)
        if best is None or value > best[1]:
            best = (gen, value)
    return best


def greedy_by_hand(model: LanguageModel, prompt: Sequence[int], max_len: int) -> tuple[int, ...]:
    vocab = model.vocabulary
    gen: tuple[int, ...] = ()
    while len(gen) < max_len and not (gen and gen[-1] == vocab.eos_id):
        dist = model.next_distribution(tuple(prompt) + gen)
        best = 0
        for t in range(1, vocab.size):
            if dist[t] > dist[best]:
                best = t
        gen += (best,)
    return gen


def count_k_restricted_paths(vocab_size: int, k: int, max_depth: int) -> int:
    """Nodes (root included) of a full ``k``-ary tree of height ``max_depth`` without eos."""
    k = min(k, vocab_size)
    return sum(k**d for d in range(max_depth + 1))
