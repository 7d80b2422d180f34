"""Rule-based artificial error generation.

Words are deleted, swapped, inserted and replaced, and characters inside
words are noised. Replacement candidates come from a confusion index: every
dictionary word within a small Damerau-Levenshtein distance of the token.
"""

from __future__ import annotations

import bisect
import itertools
import math
import random
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple, Union

from .corpus_io import ParallelPair, PathLike, Provenance, TokenSequence, _read_lines, as_tokens
from .errors import ConfigError, FormatError

WORD_OPS = ("replace", "delete", "insert", "swap")
CHAR_OPS = ("replace", "delete", "insert", "swap")

DEFAULT_WORD_WEIGHTS = {"replace": 0.7, "delete": 0.1, "insert": 0.1, "swap": 0.1}
DEFAULT_CHAR_WEIGHTS = {"replace": 0.25, "delete": 0.25, "insert": 0.25, "swap": 0.25}

_MASK64 = (1 << 64) - 1


def mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def hash64(seed: int, index: int) -> int:
    """Per-sentence seed: ``mix64(mix64(seed) XOR index)`` on 64-bit words."""
    return mix64(mix64(seed & _MASK64) ^ (index & _MASK64))


def damerau_levenshtein(s: str, t: str, max_distance: Optional[int] = None) -> int:
    """Unrestricted Damerau-Levenshtein distance (Lowrance-Wagner).

    With ``max_distance`` set, returns ``max_distance + 1`` as soon as the
    length difference alone rules the pair out.
    """
    m, n = len(s), len(t)
    if max_distance is not None and abs(m - n) > max_distance:
        return max_distance + 1
    if m == 0 or n == 0:
        return m + n
    big = m + n
    last_row: Dict[str, int] = {}
    d = [[big] * (n + 2), [big] + list(range(n + 1))]
    for i in range(1, m + 1):
        row = [big, i] + [0] * n
        d.append(row)
        up = d[i]
        si = s[i - 1]
        last_col = 0
        for j in range(1, n + 1):
            tj = t[j - 1]
            k = last_row.get(tj, 0)
            l = last_col
            if si == tj:
                cost = 0
                last_col = j
            else:
                cost = 1
            row[j + 1] = min(
                up[j] + cost,
                row[j] + 1,
                up[j + 1] + 1,
                d[k][l] + (i - k - 1) + 1 + (j - l - 1),
            )
        last_row[si] = i
    return d[m + 1][n + 1]


def is_punctuation(token: str) -> bool:
    return bool(token) and all(unicodedata.category(ch).startswith("P") for ch in token)


def _deletes(word: str, depth: int) -> Set[str]:
    out = {word}
    frontier = {word}
    for _ in range(depth):
        nxt = set()
        for w in frontier:
            for k in range(len(w)):
                nxt.add(w[:k] + w[k + 1:])
        nxt -= out
        out |= nxt
        frontier = nxt
    return out


class Neighbor(NamedTuple):
    word: str
    distance: int
    count: int


class ConfusionIndex:
    """Deletion-neighbourhood index over a word list.

    Every word and each of its variants with up to ``max_distance`` characters
    deleted is indexed; a query generates its own delete variants, collects the
    words sharing any variant and keeps those within ``max_distance``. Two
    strings within distance k always share a variant reachable by at most k
    deletions from each side, so the candidate set is complete.
    """

    def __init__(self, dictionary: Union[Mapping[str, int], Iterable[str]], max_distance: int = 2):
        if max_distance not in (1, 2):
            raise ConfigError(f"max_distance must be 1 or 2, got {max_distance}")
        counts: Dict[str, int] = {}
        if isinstance(dictionary, Mapping):
            items = dictionary.items()
        else:
            items = ((w, 1) for w in dictionary)
        for w, c in items:
            if not w:
                continue
            counts[w] = counts.get(w, 0) + int(c)
        if not counts:
            raise ConfigError("dictionary is empty")
        self.max_distance = max_distance
        self.counts = counts
        self.words: List[str] = list(counts)
        self._deletes: Dict[str, Union[int, List[int]]] = {}
        index = self._deletes
        for wid, w in enumerate(self.words):
            for v in _deletes(w, max_distance):
                hit = index.get(v)
                if hit is None:
                    index[v] = wid
                elif isinstance(hit, int):
                    index[v] = [hit, wid]
                else:
                    hit.append(wid)
        chars: Counter = Counter()
        for w in self.words:
            chars.update(w)
        self.alphabet: List[str] = sorted(chars)
        self._char_cum = list(itertools.accumulate(chars[ch] for ch in self.alphabet))
        self._word_cum = list(itertools.accumulate(counts[w] for w in self.words))
        self._cache: Dict[str, Tuple[str, ...]] = {}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.counts

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        return state

    def neighbors(self, word: str) -> List[Neighbor]:
        """Dictionary words within ``max_distance`` of ``word`` (excluding it),
        ranked by distance, then descending count, then lexicographically."""
        k = self.max_distance
        cand: Set[int] = set()
        index = self._deletes
        for v in _deletes(word, k):
            hit = index.get(v)
            if hit is None:
                continue
            if isinstance(hit, int):
                cand.add(hit)
            else:
                cand.update(hit)
        out = []
        for wid in cand:
            w = self.words[wid]
            if w == word:
                continue
            dist = damerau_levenshtein(word, w, k)
            if dist <= k:
                out.append(Neighbor(w, dist, self.counts[w]))
        out.sort(key=lambda nb: (nb.distance, -nb.count, nb.word))
        return out

    def lookup(self, word: str) -> List[str]:
        hit = self._cache.get(word)
        if hit is None:
            hit = tuple(nb.word for nb in self.neighbors(word))
            self._cache[word] = hit
        return list(hit)

    def scan(self, word: str) -> List[str]:
        """Same result as :meth:`lookup`, by scanning the whole dictionary."""
        k = self.max_distance
        out = []
        for w in self.words:
            if w != word:
                dist = damerau_levenshtein(word, w, k)
                if dist <= k:
                    out.append(Neighbor(w, dist, self.counts[w]))
        out.sort(key=lambda nb: (nb.distance, -nb.count, nb.word))
        return [nb.word for nb in out]

    def sample_word(self, rng: random.Random) -> str:
        if self._word_cum[-1] <= 0:
            return self.words[rng.randrange(len(self.words))]
        return self.words[bisect.bisect_right(self._word_cum, rng.random() * self._word_cum[-1])]

    def sample_char(self, rng: random.Random) -> str:
        return self.alphabet[bisect.bisect_right(self._char_cum, rng.random() * self._char_cum[-1])]


def build_confusion_index(dictionary: Union[Mapping[str, int], Iterable[str]], max_distance: int = 2) -> ConfusionIndex:
    return ConfusionIndex(dictionary, max_distance)


def lookup(index: ConfusionIndex, word: str) -> List[str]:
    return index.lookup(word)


def read_dictionary(path: PathLike) -> Dict[str, int]:
    """One ``word`` or ``word<TAB>count`` per line; repeated words add up."""
    counts: Dict[str, int] = {}
    for lineno, line in enumerate(_read_lines(path), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) > 2:
            raise FormatError("expected word or word<TAB>count", str(path), lineno)
        word = fields[0]
        count = 1
        if len(fields) == 2:
            try:
                count = int(fields[1])
            except ValueError:
                raise FormatError(f"count is not an integer: {fields[1]!r}", str(path), lineno) from None
            if count < 0:
                raise FormatError("negative count", str(path), lineno)
        counts[word] = counts.get(word, 0) + count
    return counts


# ---------------------------------------------------------------------------
# noising


def _normalize_weights(weights: Mapping[str, float], ops: Sequence[str], what: str) -> Tuple[float, ...]:
    unknown = set(weights) - set(ops)
    if unknown:
        raise ConfigError(f"unknown {what} op(s): {sorted(unknown)}")
    vals = [float(weights.get(op, 0.0)) for op in ops]
    if any(v < 0 or math.isnan(v) for v in vals):
        raise ConfigError(f"{what} weights must be non-negative")
    total = sum(vals)
    if total <= 0:
        raise ConfigError(f"{what} weights must sum to a positive value")
    return tuple(itertools.accumulate(v / total for v in vals))


def parse_weights(spec: str) -> Dict[str, float]:
    """``"replace=0.7,delete=0.1"`` -> dict."""
    out = {}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"bad weight {item!r}, expected op=value")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"bad weight value {val!r}") from None
    return out


@dataclass(frozen=True)
class CorruptionConfig:
    seed: int = 0
    p_word: float = 0.15
    word_op_weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WORD_WEIGHTS))
    p_char: float = 0.1
    char_op_weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_CHAR_WEIGHTS))
    max_distance: int = 2
    # draw an error count per sentence instead of a Bernoulli trial per token
    per_sentence_rate: bool = False
    # never let a replacement produce a token already present in the sentence
    avoid_sentence_tokens: bool = False

    def __post_init__(self):
        for name in ("p_word", "p_char"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")
        if self.max_distance not in (1, 2):
            raise ConfigError(f"max_distance must be 1 or 2, got {self.max_distance}")
        object.__setattr__(self, "_word_cum", _normalize_weights(self.word_op_weights, WORD_OPS, "word"))
        object.__setattr__(self, "_char_cum", _normalize_weights(self.char_op_weights, CHAR_OPS, "char"))

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "p_word": self.p_word,
            "word_op_weights": {op: float(self.word_op_weights.get(op, 0.0)) for op in WORD_OPS},
            "p_char": self.p_char,
            "char_op_weights": {op: float(self.char_op_weights.get(op, 0.0)) for op in CHAR_OPS},
            "max_distance": self.max_distance,
            "per_sentence_rate": self.per_sentence_rate,
            "avoid_sentence_tokens": self.avoid_sentence_tokens,
        }


def _draw(rng: random.Random, cum: Sequence[float], ops: Sequence[str]) -> str:
    k = bisect.bisect_right(cum, rng.random())
    return ops[min(k, len(ops) - 1)]


def char_noise(token: str, op: str, rng: random.Random, index: ConfusionIndex) -> str:
    """Apply one character op. The result always differs from ``token``:
    ops that cannot change it fall back to replacement or insertion."""
    n = len(token)
    if op == "delete" and n > 1:
        k = rng.randrange(n)
        return token[:k] + token[k + 1:]
    if op == "swap":
        spots = [k for k in range(n - 1) if token[k] != token[k + 1]]
        if spots:
            k = rng.choice(spots)
            return token[:k] + token[k + 1] + token[k] + token[k + 2:]
    if op == "insert" or len(index.alphabet) < 2:
        k = rng.randrange(n + 1)
        return token[:k] + index.sample_char(rng) + token[k:]
    # replace, and the fallback for delete/swap
    k = rng.randrange(n)
    old = token[k]
    for _ in range(32):
        ch = index.sample_char(rng)
        if ch != old:
            return token[:k] + ch + token[k + 1:]
    others = [ch for ch in index.alphabet if ch != old]
    return token[:k] + rng.choice(others) + token[k + 1:]


class AppliedOp(NamedTuple):
    position: int
    op: str


@dataclass
class CorruptionResult:
    tokens: Tuple[str, ...]
    ops: List[AppliedOp]


def _error_positions(n: int, config: CorruptionConfig, rng: random.Random) -> Optional[Set[int]]:
    if not config.per_sentence_rate:
        return None
    k = int(round(rng.gauss(config.p_word * n, 0.2)))
    k = max(0, min(n, k))
    return set(rng.sample(range(n), k))


def corrupt_tokens(
    tokens: Sequence[str],
    config: CorruptionConfig,
    index: ConfusionIndex,
    sentence_seed: int,
) -> CorruptionResult:
    """Noise one sentence and report which ops hit which original positions.

    Positions are visited left to right. A word op fires with probability
    ``p_word`` (or at the positions picked by the per-sentence count); a
    character op fires independently with probability ``p_char``. A swap
    consumes the right neighbour, which is then not visited on its own.
    """
    rng = random.Random(sentence_seed)
    toks = list(tokens)
    n = len(toks)
    forbidden = set(toks) if config.avoid_sentence_tokens else None
    chosen = _error_positions(n, config, rng)
    word_cum = config._word_cum
    char_cum = config._char_cum
    out: List[str] = []
    applied: List[AppliedOp] = []

    def noised(tok: str) -> str:
        op = _draw(rng, char_cum, CHAR_OPS)
        new = char_noise(tok, op, rng, index)
        if forbidden is not None:
            for _ in range(16):
                if new not in forbidden:
                    break
                new = char_noise(tok, op, rng, index)
            else:
                return tok
        return new

    i = 0
    while i < n:
        tok = toks[i]
        fire = rng.random() < config.p_word if chosen is None else i in chosen
        op = _draw(rng, word_cum, WORD_OPS) if fire else None
        char_fire = rng.random() < config.p_char
        if op == "delete":
            applied.append(AppliedOp(i, "delete"))
            i += 1
            continue
        if op == "swap" and i + 1 < n:
            applied.append(AppliedOp(i, "swap"))
            out.append(toks[i + 1])
            if char_fire:
                new = noised(tok)
                if new != tok:
                    applied.append(AppliedOp(i, "char"))
                tok = new
            out.append(tok)
            i += 2
            continue
        if op == "replace" and not is_punctuation(tok):
            cands = index.lookup(tok)
            if forbidden is not None:
                cands = [w for w in cands if w not in forbidden]
            new = rng.choice(cands) if cands else noised(tok)
            if new != tok:
                applied.append(AppliedOp(i, "replace"))
            tok = new
        if char_fire:
            new = noised(tok)
            if new != tok:
                applied.append(AppliedOp(i, "char"))
            tok = new
        out.append(tok)
        if op == "insert":
            applied.append(AppliedOp(i, "insert"))
            out.append(index.sample_word(rng))
        i += 1
    return CorruptionResult(tuple(out), applied)


def corrupt_sentence(
    tokens: Union[TokenSequence, Sequence[str]],
    config: CorruptionConfig,
    index: ConfusionIndex,
    sentence_seed: int,
) -> TokenSequence:
    lang = tokens.language if isinstance(tokens, TokenSequence) else None
    res = corrupt_tokens(as_tokens(tokens), config, index, sentence_seed)
    return TokenSequence(res.tokens, None, lang)


def _corrupt_chunk(items, shared):
    config, index = shared
    out = []
    for i, tokens in items:
        seed = hash64(config.seed, i)
        orig = tokens if isinstance(tokens, TokenSequence) else TokenSequence(tuple(tokens))
        res = corrupt_tokens(orig.tokens, config, index, seed)
        corrupted = TokenSequence(res.tokens, None, orig.language)
        out.append((ParallelPair(orig, corrupted, Provenance.SYNTHETIC_RULES, seed), len(res.ops)))
    return out


def corrupt_corpus_with_stats(
    sentences: Sequence[Union[TokenSequence, Sequence[str]]],
    config: CorruptionConfig,
    index: ConfusionIndex,
    threads: int = 1,
    chunk_size: int = 512,
) -> Tuple[List[ParallelPair], int]:
    """Like :func:`corrupt_corpus`, also returning the number of applied ops."""
    from .parallel import ordered_map

    results = ordered_map(
        _corrupt_chunk, list(enumerate(sentences)), threads, shared=(config, index), chunk_size=chunk_size
    )
    return [pair for pair, _ in results], sum(n for _, n in results)


def corrupt_corpus(
    sentences: Sequence[Union[TokenSequence, Sequence[str]]],
    config: CorruptionConfig,
    index: ConfusionIndex,
    threads: int = 1,
    chunk_size: int = 512,
) -> List[ParallelPair]:
    """Corrupt every sentence. Sentence ``i`` is seeded with
    ``hash64(config.seed, i)``, so the output does not depend on ``threads``."""
    return corrupt_corpus_with_stats(sentences, config, index, threads, chunk_size)[0]
