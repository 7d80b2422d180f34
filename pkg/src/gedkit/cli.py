"""``gedkit`` command line.

Exit status: 0 on success, 1 on invalid arguments or input, 2 on I/O failure.
Every file-producing subcommand writes ``<output>.manifest.json`` next to its
output.
"""

from __future__ import annotations

import argparse
import json
import logging
import pickle
import sys
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .alignment import LabelStats, align, extract_edits, label_from_alignment, skip_reason
from .analysis import (
    build_discriminator_set,
    cluster_distribution,
    edit_to_json,
    format_discriminator_tsv,
    mean_normalized_entropy,
    normalized_entropy,
    read_cluster_file,
    read_edit_log,
    type_distribution,
    TypeDistribution,
)
from .corpus_io import (
    _write_text,
    format_multiged_tsv,
    format_pairs_jsonl,
    m2_to_labels,
    read_m2,
    read_multiged_tsv,
    read_pairs,
    read_parallel,
    read_predictions,
    read_sentences,
)
from .corruption import (
    DEFAULT_CHAR_WEIGHTS,
    DEFAULT_WORD_WEIGHTS,
    ConfusionIndex,
    CorruptionConfig,
    corrupt_corpus_with_stats,
    parse_weights,
    read_dictionary,
)
from .errors import CorpusIOError, GedError
from .evaluation import best_f_half, format_curve_csv, pr_curve, render_svg, score
from .parallel import default_threads, ordered_map
from .pipeline import FORMAT_VERSIONS, PipelineConfig, RunManifest, manifest_path, sample_clean
from .tokenization import TokenizerKind, TokenizerScheme

log = logging.getLogger("gedkit")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2

# options that never enter the config hash
NON_SEMANTIC = {"threads", "config", "command", "func", "action", "version"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _weights(text: str) -> Dict[str, float]:
    try:
        return parse_weights(text)
    except GedError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def _probability(text: str) -> float:
    val = float(text)
    if not 0.0 <= val <= 1.0:
        raise argparse.ArgumentTypeError("must be in [0, 1]")
    return val


def _add_threads(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker processes (default: available cores, or $GEDKIT_THREADS)")


def _add_tokenizer(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tokenizer", choices=[k.value for k in TokenizerKind], default=None,
                   help="how to split raw text (default: language setting from --config, else whitespace)")
    p.add_argument("--language", default=None, help="language code attached to the output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gedkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="store_true", help="print tool and format versions")
    parser.add_argument("--config", default=None, help="JSON config file; flags override it")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("convert", help="M2 to Multi-GED TSV")
    p.add_argument("--m2", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--annotator", type=int, default=0)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("label", help="label parallel pairs, write Multi-GED TSV")
    p.add_argument("--original", help="one original sentence per line")
    p.add_argument("--corrupted", help="one corrupted sentence per line")
    p.add_argument("--pairs", help="single-file corpus: .jsonl pairs or original<TAB>corrupted TSV")
    p.add_argument("--out", required=True)
    p.add_argument("--emit-edits", default=None, help="also write a JSON-lines edit log")
    _add_tokenizer(p)
    _add_threads(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("corrupt", help="rule-based synthetic errors")
    p.add_argument("--in", dest="input", required=True, help="one sentence per line")
    p.add_argument("--dict", required=True, help="word or word<TAB>count per line")
    p.add_argument("--out", required=True, help="JSON-lines pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-word", type=_probability, default=0.15)
    p.add_argument("--p-char", type=_probability, default=0.1)
    p.add_argument("--weights", type=_weights, default=dict(DEFAULT_WORD_WEIGHTS))
    p.add_argument("--char-weights", type=_weights, default=dict(DEFAULT_CHAR_WEIGHTS))
    p.add_argument("--max-distance", type=int, choices=[1, 2], default=2)
    p.add_argument("--per-sentence-rate", action="store_true",
                   help="draw an error count per sentence instead of a per-token trial")
    p.add_argument("--avoid-sentence-tokens", action="store_true",
                   help="replacements never reuse a token already in the sentence")
    _add_tokenizer(p)
    _add_threads(p)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("confusion", help="confusion-set index")
    csub = p.add_subparsers(dest="action", parser_class=_Parser)
    q = csub.add_parser("build")
    q.add_argument("--dict", required=True)
    q.add_argument("--max-distance", type=int, choices=[1, 2], default=2)
    q.add_argument("--out", required=True, help="pickled index (only load indexes you built yourself)")
    q.set_defaults(func=cmd_confusion_build)
    q = csub.add_parser("query")
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--dict")
    src.add_argument("--index")
    q.add_argument("--max-distance", type=int, choices=[1, 2], default=2)
    q.add_argument("--word", action="append", required=True)
    q.set_defaults(func=cmd_confusion_query)

    p = sub.add_parser("sample", help="sample clean sentences")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--filter-predictions", default=None,
                   help="prediction file; sentences with any P(i) >= 0.5 are dropped")
    p.add_argument("--min-tokens", type=int, default=3)
    p.add_argument("--max-tokens", type=int, default=128)
    _add_tokenizer(p)
    _add_threads(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="token-level P/R/F0.5")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--threshold", type=_probability, default=0.5)
    p.add_argument("--out", default=None, help="also write the report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pr-curve", help="precision-recall sweep")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True, help="CSV threshold,precision,recall")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_pr_curve)

    p = sub.add_parser("analyze", help="error-type distributions and entropy")
    asub = p.add_subparsers(dest="action", parser_class=_Parser)
    q = asub.add_parser("edits")
    q.add_argument("--in", dest="input", required=True, help="edit log from label --emit-edits")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_analyze_edits)
    q = asub.add_parser("clusters")
    q.add_argument("--in", dest="input", required=True, help="edit<TAB>cluster_id lines")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_analyze_clusters)
    q = asub.add_parser("entropy")
    q.add_argument("--in", dest="input", action="append", required=True,
                   help="distribution JSON; repeat to pair one file with each --k")
    q.add_argument("--k", type=int, action="append", required=True)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_analyze_entropy)

    p = sub.add_parser("discriminator-data", help="balanced authentic/synthetic pairs")
    p.add_argument("--authentic", required=True)
    p.add_argument("--synthetic", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_tokenizer(p)
    _add_threads(p)
    p.set_defaults(func=cmd_discriminator)

    return parser


# ---------------------------------------------------------------------------
# helpers


def _semantic(args: argparse.Namespace, *drop: str) -> Dict[str, Any]:
    out = {}
    for key, val in sorted(vars(args).items()):
        if key in NON_SEMANTIC or key in drop:
            continue
        out[key] = val
    return out


def _tokenizer(args, config: PipelineConfig) -> TokenizerScheme:
    kind = args.tokenizer
    lang = args.language
    if kind is None and lang is not None:
        spec = config.language(lang)
        if spec is not None:
            kind = spec.tokenizer
    return TokenizerScheme(TokenizerKind(kind or "whitespace"), lang)


def _finish(manifest: RunManifest, outputs: Sequence[str]) -> None:
    for out in outputs:
        manifest.add_output(out)
    for out in outputs:
        manifest.write(manifest_path(out))


def _threads(args) -> int:
    return args.threads if getattr(args, "threads", None) else default_threads()


# ---------------------------------------------------------------------------
# subcommands


def cmd_convert(args, config):
    records = read_m2(args.m2)
    sentences = [m2_to_labels(rec, args.annotator) for rec in records]
    manifest = RunManifest("convert", _semantic(args, "m2", "out"))
    manifest.add_input(args.m2)
    manifest.counters = {"sentences": len(sentences)}
    _write_text(args.out, format_multiged_tsv(sentences))
    _finish(manifest, [args.out])


def _label_chunk(items, shared):
    emit = shared
    out = []
    for k, pair in items:
        a, b = pair.original.tokens, pair.corrupted.tokens
        script = align(a, b)
        sent = label_from_alignment(script, b)
        edits = None
        if emit:
            edits = [
                edit_to_json(k, e.kind, e.original_span, e.corrupted_span,
                             a[e.original_span[0]:e.original_span[1]], b[e.corrupted_span[0]:e.corrupted_span[1]])
                for e in extract_edits(script, a, b)
            ]
        out.append((sent, edits))
    return out


def cmd_label(args, config):
    tok = _tokenizer(args, config)
    if args.pairs:
        if args.original or args.corrupted:
            raise UsageError("use either --pairs or --original/--corrupted")
        pairs = read_pairs(args.pairs, tok)
        inputs = [args.pairs]
    else:
        if not (args.original and args.corrupted):
            raise UsageError("need --pairs or both --original and --corrupted")
        pairs = read_parallel(args.original, args.corrupted, tok)
        inputs = [args.original, args.corrupted]
    stats = LabelStats()
    todo = []
    for k, pair in enumerate(pairs):
        reason = skip_reason(pair)
        if reason == "degenerate":
            stats.degenerate += 1
        elif reason == "too_long":
            stats.skipped_length += 1
        elif reason == "length_ratio":
            stats.skipped_ratio += 1
        else:
            todo.append((k, pair))
    results = ordered_map(_label_chunk, todo, _threads(args), shared=bool(args.emit_edits))
    stats.labeled = len(results)
    manifest = RunManifest("label", _semantic(args, "original", "corrupted", "pairs", "out", "emit_edits"))
    for path in inputs:
        manifest.add_input(path)
    manifest.counters = stats.as_dict()
    if stats.skipped:
        log.warning("skipped %d pairs: %s", stats.skipped, stats.as_dict())
    _write_text(args.out, format_multiged_tsv(sent for sent, _ in results))
    outputs = [args.out]
    if args.emit_edits:
        _write_text(args.emit_edits, "".join(line + "\n" for _, edits in results for line in edits))
        outputs.append(args.emit_edits)
    _finish(manifest, outputs)


def cmd_corrupt(args, config):
    tok = _tokenizer(args, config)
    cfg = CorruptionConfig(
        seed=args.seed,
        p_word=args.p_word,
        word_op_weights=args.weights,
        p_char=args.p_char,
        char_op_weights=args.char_weights,
        max_distance=args.max_distance,
        per_sentence_rate=args.per_sentence_rate,
        avoid_sentence_tokens=args.avoid_sentence_tokens,
    )
    lines = read_sentences(args.input)
    index = ConfusionIndex(read_dictionary(args.dict), args.max_distance)
    sentences = [tok(line) for line in lines]
    pairs, n_ops = corrupt_corpus_with_stats(sentences, cfg, index, _threads(args))
    manifest = RunManifest("corrupt", _semantic(args, "input", "dict", "out"))
    manifest.add_input(args.input)
    manifest.add_input(args.dict)
    manifest.counters = {
        "sentences": len(pairs),
        "ops_applied": n_ops,
        "pairs_changed": sum(1 for p in pairs if p.original.tokens != p.corrupted.tokens),
        "degenerate": sum(1 for p in pairs if p.degenerate),
    }
    _write_text(args.out, format_pairs_jsonl(pairs))
    _finish(manifest, [args.out])


def cmd_confusion_build(args, config):
    index = ConfusionIndex(read_dictionary(args.dict), args.max_distance)
    manifest = RunManifest("confusion build", _semantic(args, "dict", "out"))
    manifest.add_input(args.dict)
    manifest.counters = {"words": len(index), "delete_variants": len(index._deletes),
                         "alphabet_size": len(index.alphabet)}
    try:
        with open(args.out, "wb") as f:
            pickle.dump(index, f, protocol=4)
    except OSError as exc:
        raise CorpusIOError(exc.strerror or str(exc), args.out) from exc
    _finish(manifest, [args.out])
    print(json.dumps(manifest.counters, sort_keys=True))


def cmd_confusion_query(args, config):
    if args.index:
        try:
            with open(args.index, "rb") as f:
                index = pickle.load(f)
        except OSError as exc:
            raise CorpusIOError(exc.strerror or str(exc), args.index) from exc
        except (pickle.UnpicklingError, EOFError, AttributeError, ImportError, IndexError, TypeError):
            raise UsageError(f"{args.index} is not a readable confusion index") from None
        if not isinstance(index, ConfusionIndex):
            raise UsageError(f"{args.index} is not a confusion index")
    else:
        index = ConfusionIndex(read_dictionary(args.dict), args.max_distance)
    for word in args.word:
        nbs = index.neighbors(word)
        print(json.dumps({"word": word, "neighbors": [
            {"word": nb.word, "distance": nb.distance, "count": nb.count} for nb in nbs]},
            ensure_ascii=False))


def cmd_sample(args, config):
    tok = _tokenizer(args, config)
    lines = read_sentences(args.input)
    preds = read_predictions(args.filter_predictions) if args.filter_predictions else None
    result = sample_clean(lines, args.n, args.seed, tok, preds, args.min_tokens, args.max_tokens)
    manifest = RunManifest("sample", _semantic(args, "input", "out", "filter_predictions"))
    manifest.add_input(args.input)
    if args.filter_predictions:
        manifest.add_input(args.filter_predictions)
    manifest.counters = result.counters
    if result.counters["shortfall"]:
        log.warning("only %d sentences survived filtering, %d requested",
                    result.counters["survivors"], args.n)
    _write_text(args.out, "".join(s + "\n" for s in result.sentences))
    _finish(manifest, [args.out])


def _gold_pred(args):
    return read_multiged_tsv(args.gold), read_predictions(args.pred)


def cmd_evaluate(args, config):
    gold, pred = _gold_pred(args)
    report = score(gold, pred, args.threshold)
    text = json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out:
        manifest = RunManifest("evaluate", _semantic(args, "gold", "pred", "out"))
        manifest.add_input(args.gold)
        manifest.add_input(args.pred)
        manifest.counters = {"tokens": report.as_dict()["tokens"]}
        _write_text(args.out, text)
        _finish(manifest, [args.out])


def cmd_pr_curve(args, config):
    gold, pred = _gold_pred(args)
    curve = pr_curve(gold, pred)
    manifest = RunManifest("pr-curve", _semantic(args, "gold", "pred", "out", "svg"))
    manifest.add_input(args.gold)
    manifest.add_input(args.pred)
    thr, f = best_f_half(curve)
    manifest.counters = {"points": len(curve), "best_threshold": thr, "best_f_half": f}
    _write_text(args.out, format_curve_csv(curve))
    outputs = [args.out]
    if args.svg:
        try:
            render_svg(curve, args.svg)
        except OSError as exc:
            raise CorpusIOError(exc.strerror or str(exc), args.svg) from exc
        outputs.append(args.svg)
    _finish(manifest, outputs)


def _write_dist(args, subcommand: str, dist: TypeDistribution) -> None:
    manifest = RunManifest(subcommand, _semantic(args, "input", "out"))
    manifest.add_input(args.input)
    manifest.counters = {"edits": dist.total}
    _write_text(args.out, json.dumps(dist.as_dict(), indent=2, ensure_ascii=False) + "\n")
    _finish(manifest, [args.out])


def cmd_analyze_edits(args, config):
    _write_dist(args, "analyze edits", type_distribution(read_edit_log(args.input)))


def cmd_analyze_clusters(args, config):
    _write_dist(args, "analyze clusters", cluster_distribution(read_cluster_file(args.input)))


def _load_dist(path: str) -> TypeDistribution:
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except OSError as exc:
        raise CorpusIOError(exc.strerror or str(exc), path) from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None
    try:
        return TypeDistribution.from_dict(obj)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise UsageError(f"{path}: not a distribution file ({exc})") from None


def cmd_analyze_entropy(args, config):
    if len(args.input) not in (1, len(args.k)):
        raise UsageError("give one --in, or one --in per --k")
    paths = args.input if len(args.input) > 1 else args.input * len(args.k)
    loaded = {p: _load_dist(p) for p in dict.fromkeys(paths)}
    pairs = [(loaded[p], k) for p, k in zip(paths, args.k)]
    result = {
        "per_k": [{"k": k, "input": p, "normalized_entropy": normalized_entropy(loaded[p], k)}
                  for p, k in zip(paths, args.k)],
        "mean_normalized_entropy": mean_normalized_entropy(pairs),
        "taxonomy": pairs[0][0].taxonomy,
    }
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out:
        manifest = RunManifest("analyze entropy", _semantic(args, "input", "out"))
        for path in dict.fromkeys(args.input):
            manifest.add_input(path)
        _write_text(args.out, text)
        _finish(manifest, [args.out])


def cmd_discriminator(args, config):
    tok = _tokenizer(args, config)
    authentic = read_pairs(args.authentic, tok)
    synthetic = read_pairs(args.synthetic, tok)
    examples = build_discriminator_set(authentic, synthetic, args.seed)
    manifest = RunManifest("discriminator-data", _semantic(args, "authentic", "synthetic", "out"))
    manifest.add_input(args.authentic)
    manifest.add_input(args.synthetic)
    manifest.counters = {"examples": len(examples), "per_class": len(examples) // 2}
    _write_text(args.out, format_discriminator_tsv(examples))
    _finish(manifest, [args.out])


# ---------------------------------------------------------------------------
# entry point


def _apply_config(parser: argparse.ArgumentParser, argv: List[str], config: PipelineConfig) -> None:
    """Feed config values in as parser defaults so explicit flags still win."""
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in sub_action.choices), None)
    if command is None:
        return
    sub = sub_action.choices[command]
    targets = [sub]
    nested = [a for a in sub._actions if isinstance(a, argparse._SubParsersAction)]
    if nested:
        action = next((a for a in argv if a in nested[0].choices), None)
        if action is not None:
            targets = [nested[0].choices[action]]
    dests = {a.dest for t in targets for a in t._actions}
    defaults: Dict[str, Any] = {}
    if config.seed is not None and "seed" in dests:
        defaults["seed"] = config.seed
    section = dict(config.sections.get(command, {}))
    if nested and len(targets) == 1 and targets[0] is not sub:
        section = {k: v for k, v in section.items() if not isinstance(v, dict)}
        section.update(config.sections.get(command, {}).get(action, {}))
    for key, val in section.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            raise UsageError(f"config section {command!r}: unknown option {key!r}")
        defaults[dest] = val
    for t in targets:
        t.set_defaults(**defaults)
        # a value from the config satisfies a required flag
        for a in t._actions:
            if a.dest in defaults:
                a.required = False


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        config = PipelineConfig.load(known.config) if known.config else PipelineConfig()
        _apply_config(parser, argv, config)
    except UsageError as exc:
        print(f"gedkit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CorpusIOError as exc:
        print(f"gedkit: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GedError as exc:
        print(f"gedkit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    if args.version:
        fmts = ", ".join(f"{k} {v}" for k, v in FORMAT_VERSIONS.items())
        print(f"gedkit {__version__} (formats: {fmts})")
        return EXIT_OK
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        print("gedkit: error: a subcommand is required", file=sys.stderr)
        return EXIT_INVALID
    try:
        args.func(args, config)
    except CorpusIOError as exc:
        print(f"gedkit: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"gedkit: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, GedError, ValueError) as exc:
        print(f"gedkit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
