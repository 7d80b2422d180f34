"""Error-type distributions, diversity (normalized entropy) and the
authentic-vs-synthetic discriminator dataset.

The eight-way taxonomy is a coarse, language-agnostic approximation of
ERRANT-style error types; it is not the ERRANT inventory.
"""

from __future__ import annotations

import enum
import json
import math
import random
import unicodedata
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, NamedTuple, Sequence, Tuple, Union

from .alignment import align, extract_edits
from .corpus_io import ParallelPair, PathLike, _read_lines, _write_text
from .corruption import damerau_levenshtein, is_punctuation
from .errors import FormatError

TAXONOMY_NAME = "gedkit-coarse-8"
TAXONOMY_NOTE = "coarse language-agnostic approximation of ERRANT-style error types"


class ErrorType(str, enum.Enum):
    MISSING = "MISSING"
    EXTRA = "EXTRA"
    ORDER = "ORDER"
    CASE = "CASE"
    DIACR = "DIACR"
    PUNCT = "PUNCT"
    SPELL = "SPELL"
    OTHER = "OTHER"


class EditRecord(NamedTuple):
    """One merged edit with the tokens it covers on each side."""

    kind: str
    original: Tuple[str, ...]
    corrupted: Tuple[str, ...]


def strip_diacritics(text: str) -> str:
    return "".join(ch for ch in unicodedata.normalize("NFD", text) if not unicodedata.combining(ch))


def classify_edit(edit: Union[EditRecord, Tuple[str, Sequence[str], Sequence[str]]]) -> ErrorType:
    kind, orig, corr = edit
    orig, corr = tuple(orig), tuple(corr)
    if not corr:
        return ErrorType.MISSING
    if not orig:
        return ErrorType.EXTRA
    if len(orig) == 2 and len(corr) == 2 and orig[0] != orig[1] and orig == corr[::-1]:
        return ErrorType.ORDER
    o, c = " ".join(orig), " ".join(corr)
    if o.casefold() == c.casefold():
        return ErrorType.CASE
    if strip_diacritics(o) == strip_diacritics(c):
        return ErrorType.DIACR
    if all(is_punctuation(t) for t in orig) or all(is_punctuation(t) for t in corr):
        return ErrorType.PUNCT
    if len(orig) == 1 and len(corr) == 1 and damerau_levenshtein(o, c, 2) <= 2:
        return ErrorType.SPELL
    return ErrorType.OTHER


@dataclass
class TypeDistribution:
    counts: Dict[str, int] = field(default_factory=dict)
    taxonomy: str = TAXONOMY_NAME

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __add__(self, other: "TypeDistribution") -> "TypeDistribution":
        merged = dict(self.counts)
        for key, val in other.counts.items():
            merged[key] = merged.get(key, 0) + val
        return TypeDistribution(merged, self.taxonomy)

    def nonzero(self) -> Dict[str, int]:
        return {k: v for k, v in self.counts.items() if v > 0}

    def normalized(self) -> Dict[str, float]:
        total = self.total
        if total == 0:
            raise ValueError("cannot normalize an empty distribution")
        return {k: v / total for k, v in self.counts.items()}

    def top(self, n: int = 10) -> List[Tuple[str, int]]:
        return sorted(self.nonzero().items(), key=lambda kv: (-kv[1], kv[0]))[:n]

    def as_dict(self) -> dict:
        out = {"taxonomy": self.taxonomy, "counts": self.counts, "total": self.total}
        if self.taxonomy == TAXONOMY_NAME:
            out["note"] = TAXONOMY_NOTE
        return out

    @classmethod
    def from_dict(cls, obj: Mapping) -> "TypeDistribution":
        counts = {str(k): int(v) for k, v in obj["counts"].items()}
        if any(v < 0 for v in counts.values()):
            raise ValueError("negative count in distribution")
        return cls(counts, obj.get("taxonomy", TAXONOMY_NAME))


def type_distribution(edits: Iterable[Union[EditRecord, Tuple]]) -> TypeDistribution:
    counts = {t.value: 0 for t in ErrorType}
    for edit in edits:
        counts[classify_edit(edit).value] += 1
    return TypeDistribution(counts)


def cluster_distribution(cluster_ids: Iterable[Hashable]) -> TypeDistribution:
    counts: Dict[str, int] = {}
    for cid in cluster_ids:
        key = str(cid)
        counts[key] = counts.get(key, 0) + 1
    return TypeDistribution(dict(sorted(counts.items())), taxonomy="clusters")


def normalized_entropy(dist: Union[TypeDistribution, Sequence[int]], k: int) -> float:
    """Shannon entropy (natural log) of the distribution divided by ln k."""
    counts = list(dist.counts.values()) if isinstance(dist, TypeDistribution) else list(dist)
    if k < 2:
        raise ValueError("k must be >= 2")
    if any(c < 0 for c in counts):
        raise ValueError("negative count")
    total = sum(counts)
    if total == 0:
        raise ValueError("entropy of an empty distribution is undefined")
    nonzero = [c for c in counts if c > 0]
    if len(nonzero) > k:
        raise ValueError(f"{len(nonzero)} non-empty categories exceed k={k}")
    h = -sum((c / total) * math.log(c / total) for c in nonzero)
    # rounding can push a uniform distribution a hair past 1
    return min(1.0, max(0.0, h / math.log(k)))


def mean_normalized_entropy(dists: Sequence[Tuple[Union[TypeDistribution, Sequence[int]], int]]) -> float:
    if not dists:
        raise ValueError("no distributions given")
    return sum(normalized_entropy(d, k) for d, k in dists) / len(dists)


# ---------------------------------------------------------------------------
# edit logs


def pair_edits(pair: ParallelPair) -> List[EditRecord]:
    a, b = pair.original.tokens, pair.corrupted.tokens
    script = align(a, b)
    return [
        EditRecord(e.kind, a[e.original_span[0]:e.original_span[1]], b[e.corrupted_span[0]:e.corrupted_span[1]])
        for e in extract_edits(script, a, b)
    ]


def edit_to_json(sentence: int, kind: str, original_span, corrupted_span, original, corrupted) -> str:
    obj = {
        "sentence": sentence,
        "kind": kind,
        "original_span": list(original_span),
        "corrupted_span": list(corrupted_span),
        "original": list(original),
        "corrupted": list(corrupted),
    }
    return json.dumps(obj, ensure_ascii=False)


def read_edit_log(path: PathLike) -> List[EditRecord]:
    edits = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            edits.append(EditRecord(obj["kind"], tuple(obj["original"]), tuple(obj["corrupted"])))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"bad edit record: {exc}", str(path), lineno) from None
    return edits


def read_cluster_file(path: PathLike) -> List[str]:
    """``edit<TAB>cluster_id`` lines produced by an external classifier."""
    ids = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[1]:
            raise FormatError("expected edit<TAB>cluster_id", str(path), lineno)
        ids.append(fields[1])
    return ids


# ---------------------------------------------------------------------------
# discriminator data


class Origin(str, enum.Enum):
    AUTHENTIC = "authentic"
    SYNTHETIC = "synthetic"


class DiscriminatorExample(NamedTuple):
    grammatical: str
    ungrammatical: str
    origin: Origin


def build_discriminator_set(
    authentic: Sequence[ParallelPair],
    synthetic: Sequence[ParallelPair],
    seed: int,
) -> List[DiscriminatorExample]:
    """Balanced, shuffled authentic/synthetic examples. The larger side is
    downsampled; degenerate pairs are dropped first."""
    auth = [p for p in authentic if not p.degenerate]
    synth = [p for p in synthetic if not p.degenerate]
    if not auth or not synth:
        raise ValueError(
            f"need non-empty authentic and synthetic sets (got {len(auth)} and {len(synth)} usable pairs)"
        )
    rng = random.Random(seed)
    n = min(len(auth), len(synth))
    if len(auth) > n:
        auth = rng.sample(auth, n)
    if len(synth) > n:
        synth = rng.sample(synth, n)
    examples = [DiscriminatorExample(p.original.text, p.corrupted.text, Origin.AUTHENTIC) for p in auth]
    examples += [DiscriminatorExample(p.original.text, p.corrupted.text, Origin.SYNTHETIC) for p in synth]
    rng.shuffle(examples)
    return examples


def format_discriminator_tsv(examples: Iterable[DiscriminatorExample]) -> str:
    return "".join(f"{e.grammatical}\t{e.ungrammatical}\t{e.origin.value}\n" for e in examples)


def write_discriminator_tsv(examples: Iterable[DiscriminatorExample], path: PathLike) -> None:
    _write_text(path, format_discriminator_tsv(examples))
