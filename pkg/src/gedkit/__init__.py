"""Data, label and metric tooling for grammatical error detection corpora."""

__version__ = "0.1.0"

from .alignment import align, extract_edits, label_from_alignment, label_pair
from .analysis import (
    build_discriminator_set,
    classify_edit,
    mean_normalized_entropy,
    normalized_entropy,
    type_distribution,
)
from .corpus_io import (
    LabeledSentence,
    M2Record,
    ParallelPair,
    PredictionFile,
    TokenSequence,
    m2_to_labels,
    read_m2,
    read_multiged_tsv,
    read_parallel,
    read_predictions,
    write_multiged_tsv,
)
from .corruption import (
    ConfusionIndex,
    CorruptionConfig,
    build_confusion_index,
    corrupt_corpus,
    corrupt_sentence,
)
from .evaluation import best_f_half, pr_curve, score
from .tokenization import TokenizerScheme, detokenize, tokenize

__all__ = [
    "ConfusionIndex",
    "CorruptionConfig",
    "LabeledSentence",
    "M2Record",
    "ParallelPair",
    "PredictionFile",
    "TokenSequence",
    "TokenizerScheme",
    "align",
    "best_f_half",
    "build_confusion_index",
    "build_discriminator_set",
    "classify_edit",
    "corrupt_corpus",
    "corrupt_sentence",
    "detokenize",
    "extract_edits",
    "label_from_alignment",
    "label_pair",
    "m2_to_labels",
    "mean_normalized_entropy",
    "normalized_entropy",
    "pr_curve",
    "read_m2",
    "read_multiged_tsv",
    "read_parallel",
    "read_predictions",
    "score",
    "tokenize",
    "type_distribution",
    "write_multiged_tsv",
]
