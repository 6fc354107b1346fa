"""Next-token distribution models.

Any object with a ``vocabulary`` attribute and a ``next_distribution(prefix)``
method can drive a search. Three deterministic toy models ship here so the
search engine can be exercised without a neural network: a uniform model, an
add-alpha smoothed n-gram model and a scripted lookup table.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    eos_id: int | None = None
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        if not tokens:
            raise ValueError("vocabulary must contain at least one token")
        for tok in tokens:
            if not isinstance(tok, str) or not tok:
                raise ValueError(f"invalid token {tok!r}: tokens must be non-empty strings")
        index = {tok: i for i, tok in enumerate(tokens)}
        if len(index) != len(tokens):
            raise ValueError("vocabulary tokens must be unique")
        if self.eos_id is not None and not 0 <= self.eos_id < len(tokens):
            raise ValueError(f"eos_id {self.eos_id} out of range for {len(tokens)} tokens")
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise ValueError(f"unknown token {token!r}") from None

    def encode(self, text: str) -> list[int]:
        """Whitespace-tokenize ``text``; unknown tokens raise ``ValueError``."""
        return [self.id_of(tok) for tok in text.split()]

    def decode(self, ids: Iterable[int]) -> str:
        return " ".join(self.tokens[i] for i in ids)

    def check_ids(self, ids: Iterable[int]) -> None:
        n = len(self.tokens)
        for i in ids:
            if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 0 <= i < n:
                raise ValueError(f"invalid token id {i!r} for vocabulary of size {n}")


class TokenDistribution:
    """Validated, read-only probability vector over a vocabulary."""

    __slots__ = ("probs",)

    def __init__(self, probs: Sequence[float] | np.ndarray):
        arr = np.array(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("distribution must be a non-empty 1-d vector")
        if np.isnan(arr).any() or (arr < 0).any() or (arr > 1).any():
            raise ValueError("probabilities must lie in [0, 1]")
        total = math.fsum(arr.tolist())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        arr.flags.writeable = False
        self.probs = arr

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, i):
        return self.probs[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TokenDistribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __repr__(self) -> str:
        return f"TokenDistribution({self.probs.tolist()!r})"

    @classmethod
    def uniform(cls, size: int) -> "TokenDistribution":
        return cls(np.full(size, 1.0 / size))


class LanguageModel(Protocol):
    vocabulary: Vocabulary

    def next_distribution(self, prefix: Sequence[int]) -> TokenDistribution: ...


def next_distribution(model: LanguageModel, prefix: Sequence[int]) -> TokenDistribution:
    """Query ``model`` after validating every id in ``prefix``."""
    model.vocabulary.check_ids(prefix)
    dist = model.next_distribution(tuple(int(i) for i in prefix))
    if len(dist) != model.vocabulary.size:
        raise ValueError(
            f"model returned {len(dist)} probabilities for a vocabulary of {model.vocabulary.size}"
        )
    return dist


class UniformModel:
    """Every token equally likely after every prefix."""

    def __init__(self, vocabulary: Vocabulary):
        self.vocabulary = vocabulary
        self._dist = TokenDistribution.uniform(vocabulary.size)

    @classmethod
    def of_size(cls, size: int) -> "UniformModel":
        if size < 1:
            raise ValueError("uniform model needs at least one token")
        return cls(Vocabulary(tuple(f"t{i}" for i in range(size))))

    def next_distribution(self, prefix: Sequence[int]) -> TokenDistribution:
        return self._dist


class NGramModel:
    """Add-alpha smoothed n-gram model over a fixed vocabulary.

    Contexts are the last ``order - 1`` tokens of the prefix. A context never
    seen in training (including a prefix shorter than ``order - 1``) gets the
    uniform distribution ``alpha / (alpha * V)``; there is no backoff to
    shorter contexts.
    """

    def __init__(
        self,
        order: int,
        counts: Mapping[tuple[int, ...], Mapping[int, int]],
        alpha: float,
        vocabulary: Vocabulary,
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not alpha > 0:
            raise ValueError("smoothing alpha must be > 0")
        self.order = order
        self.alpha = float(alpha)
        self.vocabulary = vocabulary
        frozen: dict[tuple[int, ...], dict[int, int]] = {}
        for ctx, succ in counts.items():
            ctx = tuple(ctx)
            if len(ctx) != order - 1:
                raise ValueError(f"context {ctx} has length {len(ctx)}, expected {order - 1}")
            vocabulary.check_ids(ctx)
            vocabulary.check_ids(succ)
            if any(c < 0 for c in succ.values()):
                raise ValueError("counts must be non-negative")
            frozen[ctx] = dict(succ)
        self.counts = frozen
        V = vocabulary.size
        self._uniform = TokenDistribution.uniform(V)
        self._table: dict[tuple[int, ...], TokenDistribution] = {}
        for ctx, succ in frozen.items():
            total = sum(succ.values())
            vec = np.full(V, self.alpha)
            for tok, c in succ.items():
                vec[tok] += c
            self._table[ctx] = TokenDistribution(vec / (total + self.alpha * V))

    def next_distribution(self, prefix: Sequence[int]) -> TokenDistribution:
        n = self.order - 1
        if len(prefix) < n:
            return self._uniform
        ctx = tuple(prefix[len(prefix) - n :]) if n else ()
        return self._table.get(ctx, self._uniform)

    def prob(self, context: Sequence[int], token: int) -> float:
        return float(self.next_distribution(context)[token])

    def to_dict(self) -> dict:
        toks = self.vocabulary.tokens
        counts = {
            " ".join(toks[i] for i in ctx): {toks[t]: c for t, c in sorted(succ.items())}
            for ctx, succ in sorted(self.counts.items())
        }
        return {
            "format": "treesearch-ngram",
            "order": self.order,
            "alpha": self.alpha,
            "vocab": list(toks),
            "eos": None if self.vocabulary.eos_id is None else toks[self.vocabulary.eos_id],
            "counts": counts,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "NGramModel":
        if doc.get("format") != "treesearch-ngram":
            raise ValueError("not an n-gram model document")
        tokens = tuple(doc["vocab"])
        eos = doc.get("eos")
        vocab = Vocabulary(tokens, None if eos is None else tokens.index(eos))
        counts = {}
        for ctx, succ in doc["counts"].items():
            key = tuple(vocab.encode(ctx))
            counts[key] = {vocab.id_of(t): int(c) for t, c in succ.items()}
        return cls(int(doc["order"]), counts, float(doc["alpha"]), vocab)

    def save(self, path: str | Path) -> None:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        Path(path).write_text(text, encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NGramModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_ngram(
    corpus: Sequence[str] | str, order: int, alpha: float = 1.0, eos: str | None = None
) -> NGramModel:
    """Count every length-``order`` window of ``corpus``.

    ``corpus`` is a token list or whitespace-delimited text. The vocabulary is
    the distinct corpus tokens in first-appearance order; ``eos``, if given,
    must be one of them.
    """
    tokens = corpus.split() if isinstance(corpus, str) else list(corpus)
    if order < 1:
        raise ValueError("order must be >= 1")
    if not alpha > 0:
        raise ValueError("smoothing alpha must be > 0")
    if len(tokens) < order:
        raise ValueError(f"corpus has {len(tokens)} tokens, fewer than order {order}")
    vocab_tokens = tuple(dict.fromkeys(tokens))
    eos_id = None
    if eos is not None:
        if eos not in vocab_tokens:
            raise ValueError(f"eos token {eos!r} does not occur in the corpus")
        eos_id = vocab_tokens.index(eos)
    vocab = Vocabulary(vocab_tokens, eos_id)
    ids = [vocab.id_of(t) for t in tokens]
    windows = Counter(tuple(ids[i : i + order]) for i in range(len(ids) - order + 1))
    counts: dict[tuple[int, ...], dict[int, int]] = {}
    for window, c in sorted(windows.items()):
        counts.setdefault(window[:-1], {})[window[-1]] = c
    return NGramModel(order, counts, alpha, vocab)


class ScriptedModel:
    """Exact lookup table from full token prefixes to distributions.

    Prefixes missing from the table fall back to the uniform distribution.
    """

    def __init__(
        self,
        vocabulary: Vocabulary,
        table: Mapping[Sequence[int], TokenDistribution | Sequence[float]],
    ):
        self.vocabulary = vocabulary
        self._fallback = TokenDistribution.uniform(vocabulary.size)
        self.table: dict[tuple[int, ...], TokenDistribution] = {}
        for prefix, dist in table.items():
            prefix = tuple(prefix)
            vocabulary.check_ids(prefix)
            if not isinstance(dist, TokenDistribution):
                dist = TokenDistribution(dist)
            if len(dist) != vocabulary.size:
                raise ValueError(
                    f"distribution for prefix {prefix} has {len(dist)} entries, "
                    f"vocabulary has {vocabulary.size}"
                )
            self.table[prefix] = dist

    def next_distribution(self, prefix: Sequence[int]) -> TokenDistribution:
        return self.table.get(tuple(prefix), self._fallback)

    def to_dict(self) -> dict:
        toks = self.vocabulary.tokens
        eos = self.vocabulary.eos_id
        return {
            "vocab": list(toks),
            "eos": None if eos is None else toks[eos],
            "table": {
                self.vocabulary.decode(prefix): dist.probs.tolist()
                for prefix, dist in sorted(self.table.items())
            },
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ScriptedModel":
        """Build from ``{"vocab": [...], "eos": tok | null, "table": {prefix: probs}}``.

        Table keys are tokens joined by single spaces; ``""`` is the empty prefix.
        """
        try:
            tokens = tuple(doc["vocab"])
            table_doc = doc["table"]
        except (KeyError, TypeError):
            raise ValueError("scripted model needs 'vocab' and 'table' fields") from None
        eos = doc.get("eos")
        if eos is not None and eos not in tokens:
            raise ValueError(f"eos token {eos!r} is not in the vocabulary")
        vocab = Vocabulary(tokens, None if eos is None else tokens.index(eos))
        table = {}
        for key, probs in table_doc.items():
            try:
                table[tuple(vocab.encode(key))] = TokenDistribution(probs)
            except ValueError as exc:
                raise ValueError(f"table entry {key!r}: {exc}") from None
        return cls(vocab, table)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ScriptedModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def random_scripted_model(
    rng: np.random.Generator,
    vocab_size: int,
    depth: int,
    eos: bool = False,
    concentration: float = 1.0,
) -> ScriptedModel:
    """Scripted model with Dirichlet-random distributions on every prefix of length < depth.

    With ``eos`` the last token is end-of-sequence and prefixes ending in it
    are omitted from the table.
    """
    tokens = tuple(f"w{i}" for i in range(vocab_size))
    vocab = Vocabulary(tokens, vocab_size - 1 if eos else None)
    table = {}
    frontier: list[tuple[int, ...]] = [()]
    for _ in range(depth):
        nxt = []
        for prefix in frontier:
            table[prefix] = rng.dirichlet(np.full(vocab_size, concentration))
            for t in range(vocab_size):
                if t != vocab.eos_id:
                    nxt.append(prefix + (t,))
        frontier = nxt
    return ScriptedModel(vocab, table)
