"""Tokenizers applied before alignment and labeling.

Language-specific third-party tokenizers are not bundled; run them externally
and feed the result in with the ``pretokenized`` scheme (space separated).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import regex

from .corpus_io import TokenSequence, as_tokens

# UAX #29 word boundaries (regex's WORD flag, version-1 semantics).
_WORD_BOUNDARY = regex.compile(r"(?wV1)\b")

ATTACH_LEFT = frozenset(".,!?;:)]}»")
ATTACH_RIGHT = frozenset("([{«")


class TokenizerKind(str, enum.Enum):
    WHITESPACE = "whitespace"
    UNICODE_WORDS = "unicode-words"
    PER_CHARACTER = "per-character"
    PRETOKENIZED = "pretokenized"


@dataclass(frozen=True)
class TokenizerScheme:
    kind: TokenizerKind = TokenizerKind.WHITESPACE
    language: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TokenizerKind(self.kind))

    def __call__(self, text: str) -> TokenSequence:
        return tokenize(text, self)


def _unicode_words(text: str):
    for piece in _WORD_BOUNDARY.split(text):
        # a boundary piece can still mix whitespace with other characters
        # (e.g. around format/extend characters), so split once more
        yield from piece.split()


def tokenize(text: str, scheme: Union[TokenizerScheme, str] = TokenizerScheme()) -> TokenSequence:
    if isinstance(scheme, str):
        scheme = TokenizerScheme(TokenizerKind(scheme))
    kind = scheme.kind
    if kind in (TokenizerKind.WHITESPACE, TokenizerKind.PRETOKENIZED):
        tokens = text.split()
    elif kind is TokenizerKind.UNICODE_WORDS:
        tokens = list(_unicode_words(text))
    else:
        tokens = [ch for ch in text if not ch.isspace()]
    return TokenSequence(tuple(tokens), text, scheme.language)


def _attaches(token: str, chars: frozenset) -> bool:
    return all(ch in chars for ch in token)


def detokenize(tokens: Union[TokenSequence, Sequence[str]]) -> str:
    """Join tokens with single spaces, gluing closing punctuation to the left
    and opening brackets to the right."""
    out = []
    glue_next = False
    for tok in as_tokens(tokens):
        if out and not glue_next and not _attaches(tok, ATTACH_LEFT):
            out.append(" ")
        out.append(tok)
        glue_next = _attaches(tok, ATTACH_RIGHT)
    return "".join(out)
