"""
Choosing which leaves to extend
===============================

Three samplers pick leaves from the open frontier: weighted by normalized
confidence, strictly the best B, or weighted among the best 2B ("hybrid").
"""

from collections import Counter

from treesearch import ConfidenceScore, Rng, normalize_weights, sample_leaves

weights = [0.2, 0.3, 0.5]
leaves = [(i, ConfidenceScore.from_linear(w)) for i, w in enumerate(weights)]
print("normalized:", normalize_weights(weights))

# the generator is SplitMix64: the same seed gives the same draws on any machine
rng = Rng(2024)
counts = Counter(sample_leaves("normalized_confidence", leaves, 1, rng)[0] for _ in range(10_000))
print("empirical:", [counts[i] / 10_000 for i in range(3)])

# batches are drawn without replacement, so a leaf is never extended twice per iteration
print("weighted batch of 2:", sample_leaves("normalized_confidence", leaves, 2, Rng(1)))
print("top-k batch of 2:   ", sample_leaves("top_k_leaves", leaves, 2, Rng(1)))

frontier = [(i, ConfidenceScore.from_linear(s)) for i, s in enumerate([0.9, 0.05, 0.8, 0.04, 0.7, 0.03])]
picked = Counter(sample_leaves("hybrid", frontier, 1, Rng(seed))[0] for seed in range(1_000))
print("hybrid, B=1 (pool of 2):", dict(sorted(picked.items())))
