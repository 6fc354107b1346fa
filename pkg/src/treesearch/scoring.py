"""Confidence scores for completions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

PROB_FLOOR = 1e-12
LOG_FLOOR = math.log(PROB_FLOOR)

EvaluatorHook = Callable[[Sequence[int]], float]


class ScorerKind(str, enum.Enum):
    SUM_LOGPROB = "sum_logprob"
    GEOMETRIC_MEAN = "geometric_mean"
    ARITHMETIC_MEAN = "arithmetic_mean"


@dataclass(frozen=True)
class ConfidenceScore:
    log_value: float
    linear: float

    @classmethod
    def from_log(cls, log_value: float) -> "ConfidenceScore":
        return cls(log_value, math.exp(log_value))

    @classmethod
    def from_linear(cls, linear: float) -> "ConfidenceScore":
        return cls(math.log(linear) if linear > 0 else -math.inf, linear)


NEUTRAL = ConfidenceScore(0.0, 1.0)


def clamp_logprob(lp: float) -> float:
    if math.isnan(lp) or lp > 0:
        raise ValueError(f"log probability must be <= 0, got {lp!r}")
    return lp if lp > LOG_FLOOR else LOG_FLOOR


def logprob_of(p: float) -> float:
    """Floored natural log of a probability."""
    return math.log(p) if p > PROB_FLOOR else LOG_FLOOR


def score(kind: ScorerKind | str, token_logprobs: Sequence[float]) -> ConfidenceScore:
    """Aggregate per-token log probabilities into a confidence score.

    The empty sequence scores 1.0 under every kind.
    """
    kind = ScorerKind(kind)
    lps = [clamp_logprob(lp) for lp in token_logprobs]
    if not lps:
        return NEUTRAL
    if kind is ScorerKind.SUM_LOGPROB:
        total = 0.0
        for lp in lps:
            total += lp
        return ConfidenceScore.from_log(total)
    if kind is ScorerKind.GEOMETRIC_MEAN:
        total = 0.0
        for lp in lps:
            total += lp
        return ConfidenceScore.from_log(total / len(lps))
    total = 0.0
    for lp in lps:
        total += math.exp(lp)
    return ConfidenceScore.from_linear(min(total / len(lps), 1.0))


class EvaluatorContractError(ValueError):
    pass


def apply_evaluator(base: ConfidenceScore, hook: EvaluatorHook, tokens: Sequence[int]) -> ConfidenceScore:
    value = hook(tokens)
    if not 0.0 <= value <= 1.0:
        raise EvaluatorContractError(f"evaluator returned {value!r}, outside [0, 1]")
    if value == 1.0:
        return base
    if value == 0.0:
        return ConfidenceScore(-math.inf, 0.0)
    return ConfidenceScore(base.log_value + math.log(value), base.linear * value)


def count_repetition_violations(tokens: Sequence, max_run: int, ngram_window: int) -> int:
    """Tokens beyond ``max_run`` in each identical-token run, plus copies beyond
    the second in each block of ``ngram_window`` tokens repeated back to back."""
    tokens = list(tokens)
    n = len(tokens)
    violations = 0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and tokens[j + 1] == tokens[i]:
            j += 1
        run = j - i + 1
        if run > max_run:
            violations += run - max_run
        i = j + 1

    w = ngram_window
    if w >= 1:
        i = 0
        while i + 3 * w <= n:
            block = tokens[i : i + w]
            copies = 1
            while tokens[i + copies * w : i + (copies + 1) * w] == block:
                copies += 1
            if copies >= 3:
                violations += copies - 2
                i += copies * w
            else:
                i += 1
    return violations


def repetition_penalty_hook(max_run: int = 4, ngram_window: int = 3) -> EvaluatorHook:
    """Down-weight run-away completions: ``1 / (1 + violations)``."""
    if max_run < 2:
        raise ValueError("max_run must be >= 2")
    if ngram_window < 1:
        raise ValueError("ngram_window must be >= 1")

    def hook(tokens: Sequence[int]) -> float:
        return 1.0 / (1 + count_repetition_violations(tokens, max_run, ngram_window))

    hook.max_run = max_run
    hook.ngram_window = ngram_window
    return hook
