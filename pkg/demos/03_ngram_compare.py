"""
Tree search against greedy and beam search on an n-gram model
=============================================================

Train a bigram model on a toy corpus and decode the same prompt three ways.
"""

from treesearch import SearchConfig, beam_search, greedy_decode, run_search, train_ngram

corpus = """
the cat sat on the mat . the dog sat on the log . the cat saw the dog .
a dog ran to the cat . the mat was on the floor . the log was by the door .
"""
model = train_ngram(corpus, order=2, alpha=0.1)
prompt = model.vocabulary.encode("the")
print("vocabulary:", model.vocabulary.tokens)

print("greedy:", greedy_decode(model, prompt, 6).text)
print("beam:  ", beam_search(model, prompt, width=3, max_len=6)[0].text)

config = SearchConfig(k=3, batch=4, max_depth=6, iterations=40, seed=7, top_n=5)
tree, results, stats = run_search(model, prompt, config)
for rank, r in enumerate(results, 1):
    print(f"#{rank} (score={r.score.linear:.4f}): {r.text}")
print(f"{stats.nodes_created} nodes, {stats.leaves_extended} leaves extended")

# model calls for a batch can run on threads; the tree comes out identical
from treesearch import serialize

same = serialize(run_search(model, prompt, SearchConfig(**{**config.__dict__, "workers": 4}))[0]) == serialize(tree)
print("identical with 4 workers:", same)
