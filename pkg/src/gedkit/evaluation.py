"""Token-level GED scoring.

The positive class is ``i``. A token is predicted incorrect when its
probability is at or above the threshold. Counts are micro-averaged over every
token in the corpus, punctuation included.
"""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import asdict, dataclass
from typing import List, NamedTuple, Sequence, Tuple

from .corpus_io import INCORRECT, LabeledSentence, PathLike, PredictionFile, _write_text
from .errors import ShapeError

DEFAULT_THRESHOLD = 0.5
BETA = 0.5


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


def precision_recall_f(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    """P, R and F0.5 with the zero-denominator conventions: no predicted
    positives gives P = 1 only if there are no gold positives (else 0); no gold
    positives gives R = 1; F0.5 is 0 when P and R are both 0."""
    if tp + fp == 0:
        p = 1.0 if tp + fn == 0 else 0.0
    else:
        p = tp / (tp + fp)
    r = 1.0 if tp + fn == 0 else tp / (tp + fn)
    b2 = BETA * BETA
    denom = b2 * p + r
    f = 0.0 if denom == 0 else (1 + b2) * p * r / denom
    return p, r, f


@dataclass(frozen=True)
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    precision: float
    recall: float
    f_half: float
    threshold: float

    @classmethod
    def from_counts(cls, counts: Counts, threshold: float) -> "EvalReport":
        p, r, f = precision_recall_f(counts.tp, counts.fp, counts.fn)
        return cls(counts.tp, counts.fp, counts.fn, counts.tn, p, r, f, threshold)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["tokens"] = self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
        out["positive_label"] = INCORRECT
        out["averaging"] = "micro"
        out["punctuation"] = "included"
        return out


class CurvePoint(NamedTuple):
    threshold: float
    precision: float
    recall: float
    f_half: float


@dataclass(frozen=True)
class PrCurve:
    points: Tuple[CurvePoint, ...]

    def __len__(self) -> int:
        return len(self.points)


def _check_shapes(gold: Sequence[LabeledSentence], pred: PredictionFile) -> None:
    if len(gold) != len(pred.sentences):
        raise ShapeError(f"gold has {len(gold)} sentences, predictions have {len(pred.sentences)}")
    for k, (g, (toks, probs)) in enumerate(zip(gold, pred.sentences)):
        if len(g.tokens) != len(toks):
            raise ShapeError(
                f"sentence {k}: gold has {len(g.tokens)} tokens, predictions have {len(toks)}"
            )
        for pos, (a, b) in enumerate(zip(g.tokens, toks)):
            if a != b:
                raise ShapeError(f"sentence {k}, token {pos}: gold {a!r} != predicted {b!r}")


def _pairs(gold: Sequence[LabeledSentence], pred: PredictionFile):
    for g, (_, probs) in zip(gold, pred.sentences):
        for lab, p in zip(g.labels, probs):
            yield lab == INCORRECT, p


def count(gold: Sequence[LabeledSentence], pred: PredictionFile, threshold: float) -> Counts:
    _check_shapes(gold, pred)
    tp = fp = fn = tn = 0
    for positive, p in _pairs(gold, pred):
        hit = p >= threshold
        if positive:
            if hit:
                tp += 1
            else:
                fn += 1
        elif hit:
            fp += 1
        else:
            tn += 1
    return Counts(tp, fp, fn, tn)


def score(gold: Sequence[LabeledSentence], pred: PredictionFile, threshold: float = DEFAULT_THRESHOLD) -> EvalReport:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    return EvalReport.from_counts(count(gold, pred, threshold), threshold)


def pr_curve(gold: Sequence[LabeledSentence], pred: PredictionFile) -> PrCurve:
    """Precision and recall at every distinct predicted probability, plus the
    sentinel thresholds 0 and 1, sorted by threshold."""
    _check_shapes(gold, pred)
    pos: List[float] = []
    neg: List[float] = []
    for positive, p in _pairs(gold, pred):
        (pos if positive else neg).append(p)
    pos.sort()
    neg.sort()
    thresholds = sorted(set(pos) | set(neg) | {0.0, 1.0})
    points = []
    for t in thresholds:
        tp = len(pos) - bisect.bisect_left(pos, t)
        fp = len(neg) - bisect.bisect_left(neg, t)
        p, r, f = precision_recall_f(tp, fp, len(pos) - tp)
        points.append(CurvePoint(t, p, r, f))
    return PrCurve(tuple(points))


def best_f_half(curve: PrCurve) -> Tuple[float, float]:
    """(threshold, F0.5) of the best point; ties go to the lower threshold."""
    if not curve.points:
        raise ValueError("empty curve")
    best = curve.points[0]
    for pt in curve.points[1:]:
        if pt.f_half > best.f_half:
            best = pt
    return best.threshold, best.f_half


def format_curve_csv(curve: PrCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "precision", "recall"])
    for pt in curve.points:
        w.writerow([repr(pt.threshold), repr(pt.precision), repr(pt.recall)])
    return buf.getvalue()


def write_curve_csv(curve: PrCurve, path: PathLike) -> None:
    _write_text(path, format_curve_csv(curve))


def render_svg(curve: PrCurve, path: PathLike, title: str = "Precision-Recall") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "gedkit", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(4.5, 4.0))
        ax.plot([pt.recall for pt in curve.points], [pt.precision for pt in curve.points], marker=".")
        ax.set_xlabel("Recall")
        ax.set_ylabel("Precision")
        ax.set_xlim(0, 1.02)
        ax.set_ylim(0, 1.02)
        ax.set_title(title)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
