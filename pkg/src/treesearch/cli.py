"""Command-line front end: ``treesearch {search,train-ngram,compare}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import threading
from pathlib import Path
from typing import Sequence

from . import __version__
from .engine import CompletionResult, ModelQueryError, SearchConfig, beam_search, greedy_decode, run_search
from .lm import LanguageModel, NGramModel, ScriptedModel, UniformModel, next_distribution, train_ngram
from .scoring import ScorerKind, logprob_of, repetition_penalty_hook, score
from .tree import to_dot

log = logging.getLogger("treesearch")

SCORERS = {
    "geometric": ScorerKind.GEOMETRIC_MEAN,
    "sumlog": ScorerKind.SUM_LOGPROB,
    "mean": ScorerKind.ARITHMETIC_MEAN,
}
SAMPLERS = {"weighted": "normalized_confidence", "topk": "top_k_leaves", "hybrid": "hybrid"}

# flags that are echoed into the manifest and can be replayed from it
REPLAY_FLAGS = (
    "model", "prompt", "score", "sampler", "k", "batch", "max_depth", "iterations",
    "max_nodes", "seed", "top", "repetition_penalty", "ngram_window", "workers",
    "hybrid_pool_factor", "output", "out", "width",
)


class CliError(Exception):
    """Reported on stderr with exit status 1."""


def load_model(descriptor: str) -> LanguageModel:
    kind, _, arg = descriptor.partition(":")
    if not arg:
        raise CliError(f"model descriptor {descriptor!r} must look like kind:argument")
    try:
        if kind == "uniform":
            return UniformModel.of_size(int(arg))
        if kind == "ngram":
            return NGramModel.load(arg)
        if kind == "scripted":
            return ScriptedModel.load(arg)
    except OSError as exc:
        raise CliError(f"cannot read model file: {exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"invalid model {descriptor!r}: {exc}") from None
    raise CliError(f"unknown model kind {kind!r} (expected uniform, ngram or scripted)")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="uniform:V | ngram:PATH | scripted:PATH")
    p.add_argument("--prompt", help="whitespace-tokenized prompt text (may be empty)")
    p.add_argument("--score", choices=sorted(SCORERS), default="geometric")
    p.add_argument("--sampler", choices=sorted(SAMPLERS), default="hybrid")
    p.add_argument("--k", type=_positive_int, default=3)
    p.add_argument("--batch", type=_positive_int, default=4)
    p.add_argument("--max-depth", type=_positive_int, default=16)
    p.add_argument("--iterations", type=_positive_int, default=64)
    p.add_argument("--max-nodes", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top", type=_positive_int, default=5)
    p.add_argument("--repetition-penalty", type=int, default=0, metavar="MAX_RUN",
                   help="longest allowed run of one token; 0 disables the penalty")
    p.add_argument("--ngram-window", type=_positive_int, default=3)
    p.add_argument("--hybrid-pool-factor", type=_positive_int, default=2)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--output", choices=("text", "json", "dot"), default="text")
    p.add_argument("--out", help="write the json/dot document here instead of stdout")
    p.add_argument("--manifest", help="replay flags from a manifest or earlier json output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treesearch", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    search = sub.add_parser("search", help="run a tree search and print ranked completions")
    _search_flags(search)

    compare = sub.add_parser("compare", help="greedy vs beam vs tree search on one prompt")
    _search_flags(compare)
    compare.add_argument("--width", type=_positive_int, default=2, help="beam width")

    train = sub.add_parser("train-ngram", help="count an n-gram model from a text corpus")
    train.add_argument("--corpus", required=True)
    train.add_argument("--order", type=_positive_int, required=True)
    train.add_argument("--alpha", type=float, default=1.0)
    train.add_argument("--eos", help="token to treat as end-of-sequence")
    train.add_argument("--out", required=True)
    return parser


def _config(args) -> SearchConfig:
    evaluator = None
    if args.repetition_penalty:
        try:
            evaluator = repetition_penalty_hook(args.repetition_penalty, args.ngram_window)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    try:
        return SearchConfig(
            scorer=SCORERS[args.score],
            sampler=SAMPLERS[args.sampler],
            k=args.k,
            batch=args.batch,
            max_depth=args.max_depth,
            iterations=args.iterations,
            max_nodes=args.max_nodes,
            seed=args.seed,
            evaluator=evaluator,
            top_n=args.top,
            hybrid_pool_factor=args.hybrid_pool_factor,
            workers=args.workers,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _manifest(args, config: SearchConfig) -> dict:
    return {
        "tool": "treesearch",
        "version": __version__,
        "command": args.command,
        "model": args.model,
        "prompt": args.prompt,
        "seed": args.seed,
        "config": config.to_dict(),
        "flags": {name: getattr(args, name) for name in REPLAY_FLAGS if hasattr(args, name)},
        "artifacts": {"out": args.out},
    }


def _format_line(rank: int, result: CompletionResult) -> str:
    return f"#{rank} (score={result.score.linear:.6g}): {result.text}"


def _emit(args, document: str) -> None:
    if args.out:
        try:
            Path(args.out).write_text(document, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}") from None
    else:
        sys.stdout.write(document)


def _prepare(args):
    if args.model is None:
        raise _UsageError("--model is required")
    if args.prompt is None:
        raise _UsageError("--prompt is required")
    model = load_model(args.model)
    try:
        prompt = model.vocabulary.encode(args.prompt)
    except ValueError as exc:
        raise CliError(f"prompt: {exc}") from None
    return model, prompt, _config(args)


class _UsageError(Exception):
    pass


def cmd_search(args) -> int:
    model, prompt, config = _prepare(args)
    tree, results, stats = run_search(model, prompt, config)
    if args.output == "json":
        doc = {
            "manifest": _manifest(args, config),
            "results": [dict(rank=i, **r.to_dict()) for i, r in enumerate(results, 1)],
            "stats": stats.to_dict(timing=False),
            "tree": tree.to_dict(),
        }
        _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    elif args.output == "dot":
        _emit(args, to_dot(tree))
    if args.output == "text" or args.out:
        for i, r in enumerate(results, 1):
            print(_format_line(i, r))
    log.info("nodes=%d iterations=%d wall=%.3fs", stats.nodes_created, stats.iterations_run, stats.wall_time)
    return 0


def cmd_train_ngram(args) -> int:
    try:
        text = Path(args.corpus).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read corpus: {exc}") from None
    try:
        model = train_ngram(text, args.order, args.alpha, args.eos)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    try:
        model.save(args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}") from None
    print(f"wrote {args.order}-gram model ({model.vocabulary.size} tokens, {len(model.counts)} contexts) to {args.out}")
    return 0


class _CountingModel:
    """Wraps a model and counts queries."""

    def __init__(self, model: LanguageModel):
        self.model = model
        self.vocabulary = model.vocabulary
        self.calls = 0
        self._lock = threading.Lock()

    def next_distribution(self, prefix):
        with self._lock:
            self.calls += 1
        return self.model.next_distribution(prefix)


def _rescore(model: LanguageModel, tokens: Sequence[int], prompt_len: int, kind: ScorerKind):
    lps = []
    for i in range(prompt_len, len(tokens)):
        dist = next_distribution(model, tokens[:i])
        lps.append(logprob_of(float(dist[tokens[i]])))
    return score(kind, lps)


def cmd_compare(args) -> int:
    model, prompt, config = _prepare(args)
    rows = []

    counted = _CountingModel(model)
    greedy = greedy_decode(counted, prompt, config.max_depth, config.scorer)
    rows.append(("greedy", greedy, counted.calls, "model calls"))

    counted = _CountingModel(model)
    beam = beam_search(counted, prompt, args.width, config.max_depth)[0]
    beam.score = _rescore(model, beam.tokens, len(prompt), config.scorer)
    rows.append((f"beam(W={args.width})", beam, counted.calls, "model calls"))

    tree, results, stats = run_search(model, prompt, config)
    rows.append(("tree", results[0], stats.nodes_created, "nodes"))

    verdicts = {
        "beam_vs_greedy": "IDENTICAL" if beam.tokens == greedy.tokens else "DIFFERENT",
        "tree_vs_greedy": "IDENTICAL" if results[0].tokens == greedy.tokens else "DIFFERENT",
        "tree_vs_beam": "IDENTICAL" if results[0].tokens == beam.tokens else "DIFFERENT",
    }
    manifest = _manifest(args, config)

    if args.output == "json":
        doc = {
            "manifest": manifest,
            "methods": [
                {"method": name, "count": count, "count_kind": what, **r.to_dict()}
                for name, r, count, what in rows
            ],
            "verdicts": verdicts,
        }
        _emit(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
        if not args.out:
            return 0
    elif args.output == "dot":
        _emit(args, to_dot(tree))
        if not args.out:
            return 0

    print("manifest:")
    print(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"scores use the {config.scorer.value} scorer")
    width = max(len(name) for name, *_ in rows)
    for name, r, count, what in rows:
        print(f"{name:<{width}}  score={r.score.linear:.6g}  {count} {what}  {r.text}")
    for key, verdict in verdicts.items():
        print(f"{key.replace('_', ' ')}: {verdict}")
    return 0


COMMANDS = {"search": cmd_search, "train-ngram": cmd_train_ngram, "compare": cmd_compare}


def _setup_logging() -> None:
    level = os.environ.get("TREESEARCH_LOG", "error").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _manifest_defaults(argv: Sequence[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--manifest")
    known, _ = pre.parse_known_args(argv)
    if not known.manifest:
        return {}
    try:
        doc = json.loads(Path(known.manifest).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot load manifest {known.manifest}: {exc}") from None
    doc = doc.get("manifest", doc)
    flags = doc.get("flags")
    if not isinstance(flags, dict):
        raise CliError(f"{known.manifest} has no replayable flags")
    return {k: v for k, v in flags.items() if k in REPLAY_FLAGS}


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        defaults = _manifest_defaults(argv)
    except CliError as exc:
        print(f"treesearch: error: {exc}", file=sys.stderr)
        return 1
    if defaults:
        for action in parser._subparsers._group_actions:
            for sub in action.choices.values():
                known = {a.dest for a in sub._actions}
                sub.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"treesearch {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (CliError, ModelQueryError) as exc:
        print(f"treesearch: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
