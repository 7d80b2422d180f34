"""Minimal Levenshtein alignment of sentence pairs and GED label derivation.

Alignment uses unit costs. When several scripts reach the minimum cost, the
backtrace (run from the end of both sequences) takes the first admissible of
match, substitute, delete, insert at every step. Equivalently, the returned
script is the minimum-cost script whose *reversed* op sequence is
lexicographically smallest under that order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

from .corpus_io import (
    CORRECT,
    INCORRECT,
    LabeledSentence,
    ParallelPair,
    TokenSequence,
    as_tokens,
)

MATCH = "match"
SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"

# tie-break rank, lower wins
OP_RANK = {MATCH: 0, SUBSTITUTE: 1, DELETE: 2, INSERT: 3}

MAX_ALIGN_LENGTH = 512
MAX_LENGTH_RATIO = 4.0

Tokens = Union[TokenSequence, Sequence[str]]


class EditOp(NamedTuple):
    kind: str
    original_index: Optional[int]
    corrupted_index: Optional[int]


@dataclass(frozen=True)
class EditScript:
    ops: Tuple[EditOp, ...]
    cost: int

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def kinds(self) -> Tuple[str, ...]:
        return tuple(op.kind for op in self.ops)


class Edit(NamedTuple):
    """A maximal run of non-match ops, as half-open spans on both sides."""

    kind: str
    original_span: Tuple[int, int]
    corrupted_span: Tuple[int, int]


def _distance_table(a: Sequence[str], b: Sequence[str]) -> List[List[int]]:
    n = len(b)
    prev = list(range(n + 1))
    table = [prev]
    for i in range(1, len(a) + 1):
        ai = a[i - 1]
        cur = [i] * (n + 1)
        left = i
        for j in range(1, n + 1):
            if ai == b[j - 1]:
                # diagonal on a match is never worse than either gap
                d = prev[j - 1]
            else:
                d = prev[j - 1]
                up = prev[j]
                if up < d:
                    d = up
                if left < d:
                    d = left
                d += 1
            cur[j] = d
            left = d
        table.append(cur)
        prev = cur
    return table


def align(original: Tokens, corrupted: Tokens) -> EditScript:
    """Minimum-cost token alignment of ``original`` onto ``corrupted``."""
    a = as_tokens(original)
    b = as_tokens(corrupted)
    table = _distance_table(a, b)
    i, j = len(a), len(b)
    ops: List[EditOp] = []
    while i > 0 or j > 0:
        d = table[i][j]
        if i > 0 and j > 0:
            diag = table[i - 1][j - 1]
            if a[i - 1] == b[j - 1]:
                i -= 1
                j -= 1
                ops.append(EditOp(MATCH, i, j))
                continue
            if diag + 1 == d:
                i -= 1
                j -= 1
                ops.append(EditOp(SUBSTITUTE, i, j))
                continue
        if i > 0 and table[i - 1][j] + 1 == d:
            i -= 1
            ops.append(EditOp(DELETE, i, None))
        else:
            j -= 1
            ops.append(EditOp(INSERT, None, j))
    ops.reverse()
    return EditScript(tuple(ops), table[-1][-1])


def _check_script(script: EditScript, n_corrupted: int) -> None:
    expected = 0
    for op in script.ops:
        if op.corrupted_index is not None:
            if op.corrupted_index != expected:
                raise ValueError(
                    f"script does not match sentence: op {op} at corrupted position {expected}"
                )
            expected += 1
    if expected != n_corrupted:
        raise ValueError(
            f"script covers {expected} corrupted tokens, sentence has {n_corrupted}"
        )


def label_from_alignment(script: EditScript, corrupted: Tokens) -> LabeledSentence:
    """Mark corrupted tokens that are not aligned with themselves, and the
    single token right after each deletion gap. A gap at the very end marks the
    last token."""
    tokens = as_tokens(corrupted)
    _check_script(script, len(tokens))
    labels = [CORRECT] * len(tokens)
    prev = None
    for kind, _, j in script.ops:
        if kind == SUBSTITUTE or kind == INSERT:
            labels[j] = INCORRECT
        elif kind == MATCH and prev == DELETE:
            labels[j] = INCORRECT
        prev = kind
    if prev == DELETE and tokens:
        labels[-1] = INCORRECT
    return LabeledSentence(tokens, tuple(labels))


@dataclass
class LabelStats:
    """Counters for corpus-level labeling."""

    labeled: int = 0
    degenerate: int = 0
    skipped_ratio: int = 0
    skipped_length: int = 0

    @property
    def skipped(self) -> int:
        return self.degenerate + self.skipped_ratio + self.skipped_length

    def merge(self, other: "LabelStats") -> "LabelStats":
        return LabelStats(
            self.labeled + other.labeled,
            self.degenerate + other.degenerate,
            self.skipped_ratio + other.skipped_ratio,
            self.skipped_length + other.skipped_length,
        )

    def as_dict(self) -> dict:
        return {
            "pairs_labeled": self.labeled,
            "pairs_skipped_degenerate": self.degenerate,
            "pairs_skipped_length_ratio": self.skipped_ratio,
            "pairs_skipped_too_long": self.skipped_length,
        }


def skip_reason(pair: ParallelPair) -> Optional[str]:
    """Why a pair would not be labeled, or None."""
    m, n = len(pair.original), len(pair.corrupted)
    if m == 0 or n == 0:
        return "degenerate"
    if m > MAX_ALIGN_LENGTH or n > MAX_ALIGN_LENGTH:
        return "too_long"
    if max(m, n) > MAX_LENGTH_RATIO * min(m, n):
        return "length_ratio"
    return None


def label_pair(pair: ParallelPair, stats: Optional[LabelStats] = None) -> LabeledSentence:
    """GED labels for the corrupted side of ``pair``.

    Degenerate pairs (either side empty) bump ``stats.degenerate``. An empty
    corrupted side has nothing to label and yields an empty sentence; an empty
    original side is a pure insertion and every token comes out incorrect.
    """
    if pair.degenerate:
        if stats is not None:
            stats.degenerate += 1
        if len(pair.corrupted) == 0:
            return LabeledSentence((), ())
    elif stats is not None:
        stats.labeled += 1
    return label_from_alignment(align(pair.original, pair.corrupted), pair.corrupted)


def extract_edits(script: EditScript, original: Tokens, corrupted: Tokens) -> List[Edit]:
    """Merge maximal runs of adjacent non-match ops into span edits.

    A run made only of deletes is a ``delete`` edit, only of inserts an
    ``insert`` edit; anything else is a ``substitute`` edit.
    """
    a = as_tokens(original)
    b = as_tokens(corrupted)
    edits: List[Edit] = []
    i = j = 0
    run_kinds: set = set()
    i0 = j0 = 0
    for op in script.ops:
        if op.kind == MATCH:
            if run_kinds:
                edits.append(_make_edit(run_kinds, i0, i, j0, j))
                run_kinds = set()
            i += 1
            j += 1
            continue
        if not run_kinds:
            i0, j0 = i, j
        run_kinds.add(op.kind)
        if op.original_index is not None:
            i += 1
        if op.corrupted_index is not None:
            j += 1
    if run_kinds:
        edits.append(_make_edit(run_kinds, i0, i, j0, j))
    if i != len(a) or j != len(b):
        raise ValueError("script inconsistent with token sequences")
    return edits


def _make_edit(kinds: set, i0: int, i1: int, j0: int, j1: int) -> Edit:
    if kinds == {DELETE}:
        kind = DELETE
    elif kinds == {INSERT}:
        kind = INSERT
    else:
        kind = SUBSTITUTE
    return Edit(kind, (i0, i1), (j0, j1))
