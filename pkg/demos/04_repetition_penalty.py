"""
Suppressing run-away completions
================================

Model confidence alone can prefer a path that repeats one token forever. A
repetition hook multiplies each score by ``1 / (1 + violations)`` and the
ranking flips to the varied completion.
"""

from treesearch import ScriptedModel, SearchConfig, Vocabulary, repetition_penalty_hook, run_search

vocab = Vocabulary(("!", "a", "b", "c"))
table = {(): [0.55, 0.45, 0.0, 0.0]}
frontier = [(t,) for t in range(4)]
for _ in range(5):
    grown = []
    for prefix in frontier:
        if all(t == 0 for t in prefix):
            table[prefix] = [0.95, 0.05 / 3, 0.05 / 3, 0.05 / 3]
        else:
            probs = [0.05] * 4
            probs[prefix[-1] % 3 + 1] = 0.85
            table[prefix] = probs
        grown.extend(prefix + (t,) for t in range(4))
    frontier = grown
model = ScriptedModel(vocab, table)

base = dict(k=4, batch=10_000, max_depth=6, iterations=10, max_nodes=100_000, top_n=3)
for label, hook in [("raw confidence", None), ("with repetition hook", repetition_penalty_hook(max_run=4))]:
    _, results, _ = run_search(model, [], SearchConfig(evaluator=hook, **base))
    print(label)
    for rank, r in enumerate(results, 1):
        print(f"  #{rank} (score={r.score.linear:.4f}): {r.text}")
