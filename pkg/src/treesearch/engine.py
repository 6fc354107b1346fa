"""Confidence-guided tree search plus greedy and beam-search baselines."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .lm import LanguageModel, TokenDistribution, next_distribution
from .sampling import Rng, SamplerKind, sample_leaves, top_k_tokens
from .scoring import (
    ConfidenceScore,
    EvaluatorHook,
    ScorerKind,
    apply_evaluator,
    logprob_of,
    score,
)
from .tree import NodeId, NodeStatus, SearchTree

log = logging.getLogger(__name__)


class ModelQueryError(RuntimeError):
    """A model call failed; ``path`` holds the token ids it was queried with."""

    def __init__(self, path: Sequence[int], cause: BaseException):
        super().__init__(f"model query failed for path {list(path)}: {cause!r}")
        self.path = list(path)


@dataclass
class SearchConfig:
    scorer: ScorerKind = ScorerKind.GEOMETRIC_MEAN
    sampler: SamplerKind = SamplerKind.HYBRID
    k: int = 3
    batch: int = 4
    max_depth: int = 16
    iterations: int = 64
    max_nodes: int = 10_000
    seed: int = 0
    evaluator: EvaluatorHook | None = None
    top_n: int = 5
    hybrid_pool_factor: int = 2
    workers: int = 1

    def __post_init__(self):
        self.scorer = ScorerKind(self.scorer)
        self.sampler = SamplerKind(self.sampler)
        for name in ("k", "batch", "max_depth", "iterations", "top_n", "hybrid_pool_factor", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_nodes < self.k + 1:
            raise ValueError("max_nodes must be >= k + 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scorer"] = self.scorer.value
        d["sampler"] = self.sampler.value
        ev = self.evaluator
        d["evaluator"] = None if ev is None else {
            "name": getattr(ev, "__name__", type(ev).__name__),
            **{a: getattr(ev, a) for a in ("max_run", "ngram_window") if hasattr(ev, a)},
        }
        return d


@dataclass
class CompletionResult:
    tokens: list[int]
    text: str
    score: ConfidenceScore
    terminal: bool
    depth: int
    node_id: NodeId | None = None

    def to_dict(self) -> dict:
        return {
            "tokens": self.tokens,
            "text": self.text,
            "score": self.score.linear,
            "log_score": self.score.log_value,
            "terminal": self.terminal,
            "depth": self.depth,
            "node": self.node_id,
        }


@dataclass
class SearchStats:
    nodes_created: int = 1
    iterations_run: int = 0
    leaves_extended: int = 0
    terminals_found: int = 0
    wall_time: float = 0.0
    stop_reason: str = "iterations"

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            del d["wall_time"]
        return d


class _PathScorer:
    """Incremental scores: running sums taken in root-to-leaf order give
    exactly the floats :func:`score` computes from the full path."""

    def __init__(self, kind: ScorerKind):
        self.kind = kind
        self.lp_sum = [0.0]
        self.p_sum = [0.0]

    def extend(self, parent: NodeId, lp: float, depth: int) -> ConfidenceScore:
        lp_sum = self.lp_sum[parent] + lp
        p_sum = self.p_sum[parent] + math.exp(lp)
        self.lp_sum.append(lp_sum)
        self.p_sum.append(p_sum)
        if self.kind is ScorerKind.SUM_LOGPROB:
            return ConfidenceScore.from_log(lp_sum)
        if self.kind is ScorerKind.GEOMETRIC_MEAN:
            return ConfidenceScore.from_log(lp_sum / depth)
        return ConfidenceScore.from_linear(min(p_sum / depth, 1.0))


def _query(model: LanguageModel, path: Sequence[int]) -> TokenDistribution:
    try:
        return next_distribution(model, path)
    except Exception as exc:
        raise ModelQueryError(path, exc) from exc


def _render(tree: SearchTree, node_id: NodeId, score_value: ConfidenceScore) -> CompletionResult:
    n = tree.nodes[node_id]
    tokens = tree.path_tokens(node_id)
    return CompletionResult(
        tokens=tokens,
        text=tree.vocabulary.decode(tokens),
        score=score_value,
        terminal=n.status is NodeStatus.TERMINAL,
        depth=n.depth,
        node_id=node_id,
    )


def rank_completions(tree: SearchTree, top_n: int) -> list[CompletionResult]:
    """Terminal, non-viable and open nodes ranked by score, ties by lower id."""
    candidates = [
        n for n in tree.nodes if n.status is not NodeStatus.EXPANDED and n.score is not None
    ]
    candidates.sort(key=lambda n: (-n.score, n.id))
    return [_render(tree, n.id, ConfidenceScore.from_log(n.score)) for n in candidates[:top_n]]


def run_search(
    model: LanguageModel, prompt: Sequence[int], config: SearchConfig | None = None
) -> tuple[SearchTree, list[CompletionResult], SearchStats]:
    """Grow a search tree from ``prompt`` and return it with ranked completions.

    Each iteration samples up to ``batch`` open leaves, fans each out to its
    ``k`` most probable next tokens and scores the new children. Children at
    ``max_depth`` that are not end-of-sequence become non-viable. Model calls
    for a batch may run on ``workers`` threads; tree writes and random draws
    stay on the calling thread, so the result does not depend on ``workers``.
    """
    config = config or SearchConfig()
    start = time.perf_counter()
    vocab = model.vocabulary
    tree = SearchTree(prompt, vocab)
    k = min(config.k, vocab.size)
    rng = Rng(config.seed)
    scorer = _PathScorer(config.scorer)
    scores: list[ConfidenceScore] = [score(config.scorer, [])]
    stats = SearchStats()
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None

    try:
        for _ in range(config.iterations):
            leaves = tree.open_leaves()
            if not leaves:
                stats.stop_reason = "exhausted"
                break
            if len(tree) >= config.max_nodes:
                stats.stop_reason = "max_nodes"
                break
            stats.iterations_run += 1
            chosen = sample_leaves(
                config.sampler,
                [(i, scores[i]) for i in leaves],
                config.batch,
                rng,
                config.hybrid_pool_factor,
            )
            # leaves past the node budget would never be extended; skip their queries
            chosen = chosen[: -(-(config.max_nodes - len(tree)) // k)]
            paths = [tree.path_tokens(i) for i in chosen]
            if pool is not None:
                dists = list(pool.map(lambda p: _query(model, p), paths))
            else:
                dists = [_query(model, p) for p in paths]

            for leaf, path, dist in zip(chosen, paths, dists):
                room = config.max_nodes - len(tree)
                if room <= 0:
                    break
                stats.leaves_extended += 1
                for token, p in top_k_tokens(dist, k)[:room]:
                    lp = logprob_of(p)
                    child = tree.add_child(leaf, token, lp)
                    node = tree.nodes[child]
                    s = scorer.extend(leaf, lp, node.depth)
                    if config.evaluator is not None:
                        s = apply_evaluator(s, config.evaluator, path + [token])
                    scores.append(s)
                    node.score = s.log_value
                    if node.status is NodeStatus.TERMINAL:
                        stats.terminals_found += 1
                    elif node.depth >= config.max_depth:
                        tree.mark_non_viable(child)
            log.debug("iteration %d: %d nodes, %d open", stats.iterations_run, len(tree), len(tree._open))
        else:
            stats.stop_reason = "iterations"
        if len(tree) >= config.max_nodes and stats.stop_reason == "iterations":
            stats.stop_reason = "max_nodes"
    finally:
        if pool is not None:
            pool.shutdown()

    stats.nodes_created = len(tree)
    stats.wall_time = time.perf_counter() - start
    log.info(
        "search finished (%s): %d nodes, %d iterations", stats.stop_reason, stats.nodes_created, stats.iterations_run
    )
    return tree, rank_completions(tree, config.top_n), stats


def greedy_decode(
    model: LanguageModel,
    prompt: Sequence[int],
    max_len: int,
    scorer: ScorerKind | str = ScorerKind.SUM_LOGPROB,
) -> CompletionResult:
    """Append the most probable token (lower id on ties) until eos or ``max_len``."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    vocab = model.vocabulary
    tokens = list(prompt)
    lps: list[float] = []
    terminal = False
    for _ in range(max_len):
        dist = _query(model, tokens)
        token = int(dist.probs.argmax())
        tokens.append(token)
        lps.append(logprob_of(float(dist.probs[token])))
        if token == vocab.eos_id:
            terminal = True
            break
    return CompletionResult(tokens, vocab.decode(tokens), score(scorer, lps), terminal, len(lps))


def beam_search(
    model: LanguageModel, prompt: Sequence[int], width: int, max_len: int
) -> list[CompletionResult]:
    """Classic beam search on total log probability.

    Beams ending in eos retire; the rest continue until ``max_len``. Returns
    the best ``width`` of retired and final beams, ties broken by the
    lexicographic order of their token ids.
    """
    if width < 1:
        raise ValueError("width must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    vocab = model.vocabulary
    prompt = tuple(prompt)
    beams: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    finished: list[tuple[float, tuple[int, ...]]] = []

    def rank(item):
        return (-item[0], item[1])

    for _ in range(max_len):
        candidates = []
        for total, gen in beams:
            probs = _query(model, prompt + gen).probs
            for token in range(vocab.size):
                candidates.append((total + logprob_of(float(probs[token])), gen + (token,)))
        candidates.sort(key=rank)
        beams = []
        for cand in candidates[:width]:
            if cand[1][-1] == vocab.eos_id:
                finished.append(cand)
            else:
                beams.append(cand)
        if not beams:
            break
    pool = sorted(finished + beams, key=rank)[:width]
    out = []
    for total, gen in pool:
        tokens = list(prompt + gen)
        out.append(
            CompletionResult(
                tokens=tokens,
                text=vocab.decode(tokens),
                score=ConfidenceScore.from_log(total),
                terminal=bool(gen) and gen[-1] == vocab.eos_id,
                depth=len(gen),
            )
        )
    return out
