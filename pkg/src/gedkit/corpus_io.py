"""Readers and writers for the corpus formats used across the pipeline.

Formats handled here:

* Multi-GED TSV: ``token<TAB>label`` per line, label in {c, i}, one blank line
  after every sentence (including the last).
* M2: ``S`` source lines followed by ``A`` edit lines, blank-line separated.
* Parallel corpora: two aligned one-sentence-per-line files, a single
  ``original<TAB>corrupted`` TSV, or the JSON-lines synthetic pair format.
* Prediction files: ``token<TAB>probability`` with blank-line separation.

All readers report failures as :class:`FormatError` with a 1-based line number.
"""

from __future__ import annotations

import enum
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .errors import CorpusIOError, FormatError

PathLike = Union[str, Path]

CORRECT = "c"
INCORRECT = "i"
LABELS = frozenset({CORRECT, INCORRECT})


@dataclass(frozen=True)
class TokenSequence:
    tokens: Tuple[str, ...]
    source_text: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        for tok in self.tokens:
            if not tok or "\t" in tok or "\n" in tok:
                raise ValueError(f"invalid token {tok!r}")
        if self.source_text is not None:
            if "".join("".join(self.tokens).split()) != "".join(self.source_text.split()):
                raise ValueError("tokens do not cover source_text")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __getitem__(self, index):
        return self.tokens[index]

    @property
    def text(self) -> str:
        """Space-joined tokens."""
        return " ".join(self.tokens)


def as_tokens(seq: Union[TokenSequence, Sequence[str]]) -> Tuple[str, ...]:
    if isinstance(seq, TokenSequence):
        return seq.tokens
    return tuple(seq)


@dataclass(frozen=True)
class LabeledSentence:
    tokens: Tuple[str, ...]
    labels: Tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if not isinstance(self.labels, tuple):
            object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.tokens) != len(self.labels):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.labels)} labels"
            )
        for lab in self.labels:
            if lab not in LABELS:
                raise ValueError(f"label must be 'c' or 'i', got {lab!r}")

    def __len__(self) -> int:
        return len(self.tokens)


class Provenance(str, enum.Enum):
    AUTHENTIC = "authentic"
    SYNTHETIC_RULES = "synthetic-rules"
    SYNTHETIC_EXTERNAL = "synthetic-external"


@dataclass(frozen=True)
class ParallelPair:
    """A grammatical sentence and its ungrammatical counterpart.

    A pair with either side empty is *degenerate*: it is carried through the
    pipeline but skipped (and counted) by labeling.
    """

    original: TokenSequence
    corrupted: TokenSequence
    provenance: Provenance = Provenance.AUTHENTIC
    seed: Optional[int] = None

    @property
    def degenerate(self) -> bool:
        return len(self.original) == 0 or len(self.corrupted) == 0

    @property
    def language(self) -> Optional[str]:
        return self.original.language or self.corrupted.language


@dataclass(frozen=True)
class M2Edit:
    start: int
    end: int
    type: str
    correction: str
    annotator: int = 0
    required: str = "REQUIRED"
    comment: str = "-NONE-"

    @property
    def is_noop(self) -> bool:
        return self.type == "noop"

    def to_line(self) -> str:
        return (
            f"A {self.start} {self.end}|||{self.type}|||{self.correction}|||"
            f"{self.required}|||{self.comment}|||{self.annotator}"
        )


@dataclass(frozen=True)
class M2Record:
    """One ``S`` block. ``edits`` excludes noop edits and is sorted by span.

    ``noops`` and ``annotators`` (in order of first appearance) are kept only
    so that :func:`write_m2` can reproduce the block.
    """

    source_tokens: Tuple[str, ...]
    edits: Tuple[M2Edit, ...] = ()
    noops: Tuple[M2Edit, ...] = ()
    annotators: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "source_tokens", tuple(self.source_tokens))
        edits = tuple(sorted(self.edits, key=lambda e: (e.start, e.end)))
        object.__setattr__(self, "edits", edits)
        object.__setattr__(self, "noops", tuple(self.noops))
        n = len(self.source_tokens)
        for e in edits:
            if not 0 <= e.start <= e.end <= n:
                raise ValueError(f"edit span ({e.start}, {e.end}) outside 0..{n}")
        if not self.annotators:
            seen: List[int] = []
            for e in list(edits) + list(self.noops):
                if e.annotator not in seen:
                    seen.append(e.annotator)
            object.__setattr__(self, "annotators", tuple(seen))
        else:
            object.__setattr__(self, "annotators", tuple(self.annotators))


@dataclass
class PredictionFile:
    sentences: List[Tuple[Tuple[str, ...], Tuple[float, ...]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sentences)


# ---------------------------------------------------------------------------
# low-level helpers


def _read_lines(path: PathLike) -> List[str]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            data = f.read()
    except OSError as exc:
        raise CorpusIOError(exc.strerror or str(exc), str(path)) from exc
    except UnicodeDecodeError as exc:
        raise FormatError(f"not valid UTF-8 ({exc.reason})", str(path)) from exc
    if not data:
        return []
    lines = data.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [ln[:-1] if ln.endswith("\r") else ln for ln in lines]


def _write_text(path: PathLike, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as exc:
        raise CorpusIOError(exc.strerror or str(exc), str(path)) from exc


def _blocks(lines: Sequence[str]) -> Iterator[List[Tuple[int, str]]]:
    """Group non-blank lines into blank-line separated blocks of (lineno, line)."""
    block: List[Tuple[int, str]] = []
    for lineno, line in enumerate(lines, start=1):
        if line.strip() == "":
            if block:
                yield block
                block = []
        else:
            block.append((lineno, line))
    if block:
        yield block


# ---------------------------------------------------------------------------
# Multi-GED TSV


def parse_multiged_tsv(lines: Sequence[str], path: Optional[str] = None) -> List[LabeledSentence]:
    sentences = []
    for block in _blocks(lines):
        tokens, labels = [], []
        for lineno, line in block:
            fields = line.split("\t")
            if len(fields) != 2:
                raise FormatError(f"expected 2 tab-separated fields, got {len(fields)}", path, lineno)
            tok, lab = fields
            if not tok:
                raise FormatError("empty token", path, lineno)
            if lab not in LABELS:
                raise FormatError(f"unknown label {lab!r} (expected c or i)", path, lineno)
            tokens.append(tok)
            labels.append(lab)
        sentences.append(LabeledSentence(tuple(tokens), tuple(labels)))
    return sentences


def read_multiged_tsv(path: PathLike) -> List[LabeledSentence]:
    return parse_multiged_tsv(_read_lines(path), str(path))


def format_multiged_tsv(sentences: Iterable[LabeledSentence]) -> str:
    out = io.StringIO()
    for sent in sentences:
        for tok, lab in zip(sent.tokens, sent.labels):
            out.write(f"{tok}\t{lab}\n")
        out.write("\n")
    return out.getvalue()


def write_multiged_tsv(sentences: Iterable[LabeledSentence], path: PathLike) -> None:
    _write_text(path, format_multiged_tsv(sentences))


# ---------------------------------------------------------------------------
# M2


def _parse_edit(line: str, n_tokens: int, path: Optional[str], lineno: int) -> M2Edit:
    fields = line[2:].split("|||")
    if len(fields) != 6:
        raise FormatError(f"expected 6 '|||'-separated fields, got {len(fields)}", path, lineno)
    span = fields[0].split()
    if len(span) != 2:
        raise FormatError(f"malformed span {fields[0]!r}", path, lineno)
    try:
        start, end = int(span[0]), int(span[1])
    except ValueError:
        raise FormatError(f"non-integer offsets {fields[0]!r}", path, lineno) from None
    try:
        annotator = int(fields[5])
    except ValueError:
        raise FormatError(f"non-integer annotator id {fields[5]!r}", path, lineno) from None
    edit = M2Edit(start, end, fields[1], fields[2], annotator, fields[3], fields[4])
    if not edit.is_noop:
        if start > end:
            raise FormatError(f"start {start} > end {end}", path, lineno)
        if start < 0 or end > n_tokens:
            raise FormatError(f"span ({start}, {end}) outside sentence of {n_tokens} tokens", path, lineno)
    return edit


def parse_m2(lines: Sequence[str], path: Optional[str] = None) -> List[M2Record]:
    records: List[M2Record] = []
    tokens: Optional[List[str]] = None
    edits: List[M2Edit] = []
    noops: List[M2Edit] = []
    annotators: List[int] = []

    def flush():
        if tokens is not None:
            records.append(M2Record(tuple(tokens), tuple(edits), tuple(noops), tuple(annotators)))

    for lineno, line in enumerate(lines, start=1):
        if line.strip() == "":
            continue
        if line == "S" or line.startswith("S "):
            flush()
            tokens = line[2:].split(" ") if len(line) > 2 else []
            if any(t == "" for t in tokens):
                raise FormatError("empty token in S line (double space?)", path, lineno)
            edits, noops, annotators = [], [], []
        elif line.startswith("A "):
            if tokens is None:
                raise FormatError("A line before any S line", path, lineno)
            edit = _parse_edit(line, len(tokens), path, lineno)
            (noops if edit.is_noop else edits).append(edit)
            if edit.annotator not in annotators:
                annotators.append(edit.annotator)
        else:
            raise FormatError(f"line must start with 'S ' or 'A ': {line[:30]!r}", path, lineno)
    flush()
    return records


def read_m2(path: PathLike) -> List[M2Record]:
    return parse_m2(_read_lines(path), str(path))


def format_m2(records: Iterable[M2Record]) -> str:
    out = io.StringIO()
    for rec in records:
        out.write("S " + " ".join(rec.source_tokens) + "\n" if rec.source_tokens else "S\n")
        for ann in rec.annotators:
            for e in rec.edits:
                if e.annotator == ann:
                    out.write(e.to_line() + "\n")
            for e in rec.noops:
                if e.annotator == ann:
                    out.write(e.to_line() + "\n")
        out.write("\n")
    return out.getvalue()


def write_m2(records: Iterable[M2Record], path: PathLike) -> None:
    _write_text(path, format_m2(records))


def m2_to_labels(record: M2Record, annotator: int = 0) -> LabeledSentence:
    """Token-level GED labels from one annotator's edits.

    Tokens inside an edit span are incorrect. An insertion (empty span) marks
    the token at the insertion point, or the last token when inserting at the
    end of the sentence.
    """
    tokens = record.source_tokens
    n = len(tokens)
    labels = [CORRECT] * n
    if record.annotators and annotator not in record.annotators:
        raise ValueError(
            f"annotator {annotator} not in record; available: {sorted(record.annotators)}"
        )
    for e in record.edits:
        if e.annotator != annotator:
            continue
        if e.start < e.end:
            for k in range(e.start, e.end):
                labels[k] = INCORRECT
        elif n:
            labels[min(e.start, n - 1)] = INCORRECT
    return LabeledSentence(tokens, tuple(labels))


# ---------------------------------------------------------------------------
# parallel corpora

Tokenizer = Callable[[str], TokenSequence]


def _split_tokens(text: str) -> TokenSequence:
    return TokenSequence(tuple(text.split()))


def read_parallel(
    path_original: PathLike,
    path_corrupted: PathLike,
    tokenizer: Optional[Tokenizer] = None,
    provenance: Provenance = Provenance.AUTHENTIC,
) -> List[ParallelPair]:
    """Pair up two line-aligned files. Sides are tokenized with ``tokenizer``
    (default: whitespace split, i.e. pre-tokenized input)."""
    tok = tokenizer or _split_tokens
    orig = _read_lines(path_original)
    corr = _read_lines(path_corrupted)
    if len(orig) != len(corr):
        raise FormatError(
            f"line count mismatch: {path_original} has {len(orig)} lines, "
            f"{path_corrupted} has {len(corr)}"
        )
    return [ParallelPair(tok(o), tok(c), provenance) for o, c in zip(orig, corr)]


def read_parallel_tsv(
    path: PathLike,
    tokenizer: Optional[Tokenizer] = None,
    provenance: Provenance = Provenance.AUTHENTIC,
) -> List[ParallelPair]:
    tok = tokenizer or _split_tokens
    pairs = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        fields = line.split("\t")
        if len(fields) != 2:
            raise FormatError(f"expected original<TAB>corrupted, got {len(fields)} fields", str(path), lineno)
        pairs.append(ParallelPair(tok(fields[0]), tok(fields[1]), provenance))
    return pairs


def pair_to_json(pair: ParallelPair) -> str:
    obj = {
        "original": pair.original.text,
        "corrupted": pair.corrupted.text,
        "language": pair.language,
        "provenance": pair.provenance.value,
        "seed": pair.seed,
    }
    return json.dumps(obj, ensure_ascii=False)


def format_pairs_jsonl(pairs: Iterable[ParallelPair]) -> str:
    return "".join(pair_to_json(p) + "\n" for p in pairs)


def write_pairs_jsonl(pairs: Iterable[ParallelPair], path: PathLike) -> None:
    _write_text(path, format_pairs_jsonl(pairs))


def read_pairs_jsonl(path: PathLike, tokenizer: Optional[Tokenizer] = None) -> List[ParallelPair]:
    tok = tokenizer or _split_tokens
    pairs = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise TypeError("expected a JSON object")
            lang = obj.get("language")
            orig = tok(obj["original"])
            corr = tok(obj["corrupted"])
            prov = Provenance(obj.get("provenance", Provenance.AUTHENTIC.value))
            seed = obj.get("seed")
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad pair record: {exc}", str(path), lineno) from None
        if lang is not None:
            orig = TokenSequence(orig.tokens, orig.source_text, lang)
            corr = TokenSequence(corr.tokens, corr.source_text, lang)
        pairs.append(ParallelPair(orig, corr, prov, seed))
    return pairs


def read_pairs(path: PathLike, tokenizer: Optional[Tokenizer] = None) -> List[ParallelPair]:
    """Read a single-file parallel corpus: ``.jsonl`` or ``original<TAB>corrupted`` TSV."""
    if str(path).endswith((".jsonl", ".json")):
        return read_pairs_jsonl(path, tokenizer)
    return read_parallel_tsv(path, tokenizer)


def read_sentences(path: PathLike) -> List[str]:
    """One sentence per line; line order preserved, nothing dropped."""
    return _read_lines(path)


# ---------------------------------------------------------------------------
# predictions


def parse_predictions(lines: Sequence[str], path: Optional[str] = None) -> PredictionFile:
    sentences = []
    for block in _blocks(lines):
        tokens, probs = [], []
        for lineno, line in block:
            fields = line.split("\t")
            if len(fields) != 2:
                raise FormatError(f"expected 2 tab-separated fields, got {len(fields)}", path, lineno)
            tok, val = fields
            if not tok:
                raise FormatError("empty token", path, lineno)
            if val == CORRECT:
                p = 0.0
            elif val == INCORRECT:
                p = 1.0
            else:
                try:
                    p = float(val)
                except ValueError:
                    raise FormatError(f"not a probability: {val!r}", path, lineno) from None
                if math.isnan(p) or not 0.0 <= p <= 1.0:
                    raise FormatError(f"probability {val} outside [0, 1]", path, lineno)
            tokens.append(tok)
            probs.append(p)
        sentences.append((tuple(tokens), tuple(probs)))
    return PredictionFile(sentences)


def read_predictions(path: PathLike) -> PredictionFile:
    return parse_predictions(_read_lines(path), str(path))
