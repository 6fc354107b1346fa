"""Confidence-guided tree search over token completions."""

from .engine import (
    CompletionResult,
    ModelQueryError,
    SearchConfig,
    SearchStats,
    beam_search,
    greedy_decode,
    rank_completions,
    run_search,
)
from .lm import (
    NGramModel,
    ScriptedModel,
    TokenDistribution,
    UniformModel,
    Vocabulary,
    next_distribution,
    random_scripted_model,
    train_ngram,
)
from .sampling import Rng, SamplerKind, normalize_weights, sample_leaves, top_k_tokens
from .scoring import (
    ConfidenceScore,
    ScorerKind,
    apply_evaluator,
    repetition_penalty_hook,
    score,
)
from .tree import NodeStatus, SearchTree, TreeError, TreeFormatError, deserialize, serialize, to_dot

__version__ = "0.1.0"

__all__ = [
    "CompletionResult",
    "ConfidenceScore",
    "ModelQueryError",
    "NGramModel",
    "NodeStatus",
    "Rng",
    "SamplerKind",
    "ScorerKind",
    "ScriptedModel",
    "SearchConfig",
    "SearchStats",
    "SearchTree",
    "TokenDistribution",
    "TreeError",
    "TreeFormatError",
    "UniformModel",
    "Vocabulary",
    "apply_evaluator",
    "beam_search",
    "deserialize",
    "greedy_decode",
    "next_distribution",
    "normalize_weights",
    "random_scripted_model",
    "rank_completions",
    "repetition_penalty_hook",
    "run_search",
    "sample_leaves",
    "score",
    "serialize",
    "to_dot",
    "top_k_tokens",
    "train_ngram",
]
