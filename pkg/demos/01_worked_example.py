"""
Growing a search tree on a tiny scripted model
==============================================

Four tokens, two steps. After "a" the model is sure of "c"; after "b" it is
torn between "c" and "d". Tree search with the geometric-mean score ranks all
four depth-2 completions; greedy and beam search give the baselines.
"""

from treesearch import (
    ScriptedModel,
    SearchConfig,
    Vocabulary,
    beam_search,
    greedy_decode,
    run_search,
    to_dot,
)

vocab = Vocabulary(("a", "b", "c", "d"))
model = ScriptedModel(
    vocab,
    {
        (): [0.6, 0.4, 0.0, 0.0],
        (0,): [0.0, 0.0, 0.9, 0.1],
        (1,): [0.0, 0.0, 0.5, 0.5],
    },
)

# k=2 children per extended leaf, and a batch big enough to extend every leaf
config = SearchConfig(k=2, batch=8, max_depth=2, iterations=10, top_n=4)
tree, results, stats = run_search(model, [], config)

for rank, result in enumerate(results, 1):
    print(f"#{rank} (score={result.score.linear:.6g}): {result.text}")
print(stats)

# the baselines agree on the winner here
print("greedy:", greedy_decode(model, [], 2).text)
for beam in beam_search(model, [], width=2, max_len=2):
    print("beam:  ", beam.text, round(beam.score.log_value, 4))

# render with `dot -Tpng` if graphviz is around
print(to_dot(tree))
