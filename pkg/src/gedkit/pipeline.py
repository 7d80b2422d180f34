"""Pipeline glue: clean-corpus sampling, run manifests and JSON configuration."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

from . import __version__
from .corpus_io import PathLike, PredictionFile, TokenSequence, _write_text
from .errors import ConfigError, CorpusIOError, ShapeError
from .tokenization import TokenizerKind

FORMAT_VERSIONS = {"multiged-tsv": 1, "m2": 1, "pairs-jsonl": 1, "edits-jsonl": 1, "manifest": 1}

MIN_TOKENS = 3
MAX_TOKENS = 128
ERROR_FREE_THRESHOLD = 0.5


# ---------------------------------------------------------------------------
# sampling


@dataclass
class SampleResult:
    sentences: List[str]
    counters: Dict[str, int]


def sample_clean(
    sentences: Sequence[str],
    n: int,
    seed: int,
    tokenizer: Callable[[str], TokenSequence],
    filter_predictions: Optional[PredictionFile] = None,
    min_tokens: int = MIN_TOKENS,
    max_tokens: int = MAX_TOKENS,
) -> SampleResult:
    """Reservoir-sample ``n`` sentences that pass the filters, returned in
    corpus order.

    Filters, in order: token count within ``[min_tokens, max_tokens]``, exact
    duplicate of an earlier line, and (with ``filter_predictions``) any token
    with P(incorrect) >= 0.5. Prediction sentences line up with the corpus's
    non-blank lines. A shortfall is reported in the counters, not raised.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if min_tokens > max_tokens:
        raise ConfigError("min_tokens > max_tokens")
    if filter_predictions is not None:
        non_blank = sum(1 for s in sentences if s.strip())
        if len(filter_predictions) != non_blank:
            raise ShapeError(
                f"prediction file has {len(filter_predictions)} sentences, corpus has {non_blank} non-blank lines"
            )
    counters = {
        "lines_read": len(sentences),
        "dropped_length": 0,
        "dropped_duplicate": 0,
        "dropped_predicted_error": 0,
    }
    rng = random.Random(seed)
    seen = set()
    reservoir: List[tuple] = []
    survivors = 0
    pred_k = 0
    for lineno, text in enumerate(sentences):
        probs = None
        if text.strip() and filter_predictions is not None:
            probs = filter_predictions.sentences[pred_k][1]
            pred_k += 1
        n_tokens = len(tokenizer(text))
        if not min_tokens <= n_tokens <= max_tokens:
            counters["dropped_length"] += 1
            continue
        if text in seen:
            counters["dropped_duplicate"] += 1
            continue
        seen.add(text)
        if probs is not None and any(p >= ERROR_FREE_THRESHOLD for p in probs):
            counters["dropped_predicted_error"] += 1
            continue
        if survivors < n:
            reservoir.append((lineno, text))
        else:
            j = rng.randrange(survivors + 1)
            if j < n:
                reservoir[j] = (lineno, text)
        survivors += 1
    reservoir.sort()
    counters["survivors"] = survivors
    counters["sampled"] = len(reservoir)
    counters["shortfall"] = max(0, n - survivors)
    return SampleResult([text for _, text in reservoir], counters)


# ---------------------------------------------------------------------------
# manifests


def file_digest(path: PathLike) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            for block in iter(lambda: f.read(1 << 20), b""):
                h.update(block)
    except OSError as exc:
        raise CorpusIOError(exc.strerror or str(exc), str(path)) from exc
    return "sha256:" + h.hexdigest()


def config_hash(config: Mapping[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    config: Dict[str, Any]
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    counters: Dict[str, Any] = field(default_factory=dict)
    tool_version: str = __version__
    created: Optional[str] = None

    def add_input(self, path: PathLike) -> None:
        self.inputs[str(path)] = file_digest(path)

    def add_output(self, path: PathLike) -> None:
        self.outputs[str(path)] = file_digest(path)

    def as_dict(self) -> dict:
        return {
            "tool": "gedkit",
            "tool_version": self.tool_version,
            "format_versions": FORMAT_VERSIONS,
            "subcommand": self.subcommand,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
            "counters": self.counters,
            "created": self.created or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }

    def digest(self) -> str:
        """Digest of the manifest with the timestamp left out."""
        obj = self.as_dict()
        obj.pop("created")
        return config_hash(obj)

    def write(self, path: PathLike) -> None:
        _write_text(path, json.dumps(self.as_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def manifest_path(output: PathLike) -> Path:
    p = Path(output)
    return p.with_name(p.name + ".manifest.json")


# ---------------------------------------------------------------------------
# configuration

ROLES = ("source", "target")


@dataclass(frozen=True)
class LanguageSpec:
    code: str
    role: str
    tokenizer: str = TokenizerKind.WHITESPACE.value


@dataclass
class PipelineConfig:
    """Run configuration loaded from JSON.

    ``sections`` holds per-subcommand option defaults keyed by option name
    (``{"corrupt": {"p_word": 0.2}}``); command-line flags override them.
    """

    languages: List[LanguageSpec] = field(default_factory=list)
    seed: Optional[int] = None
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def language(self, code: str) -> Optional[LanguageSpec]:
        for spec in self.languages:
            if spec.code == code:
                return spec
        return None

    def by_role(self, role: str) -> List[str]:
        return [spec.code for spec in self.languages if spec.role == role]

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "PipelineConfig":
        if not isinstance(obj, Mapping):
            raise ConfigError("config must be a JSON object")
        langs = []
        seen = set()
        for item in obj.get("languages", []):
            try:
                spec = LanguageSpec(item["code"], item["role"], item.get("tokenizer", "whitespace"))
            except (KeyError, TypeError):
                raise ConfigError(f"language entry needs 'code' and 'role': {item!r}") from None
            if spec.role not in ROLES:
                raise ConfigError(f"language {spec.code}: role must be one of {ROLES}, got {spec.role!r}")
            if spec.code in seen:
                raise ConfigError(f"language {spec.code} listed more than once")
            try:
                TokenizerKind(spec.tokenizer)
            except ValueError:
                raise ConfigError(f"language {spec.code}: unknown tokenizer {spec.tokenizer!r}") from None
            seen.add(spec.code)
            langs.append(spec)
        seed = obj.get("seed")
        if seed is not None and not isinstance(seed, int):
            raise ConfigError("seed must be an integer")
        sections = {k: dict(v) for k, v in obj.items() if k not in ("languages", "seed") and isinstance(v, Mapping)}
        stray = [k for k, v in obj.items() if k not in ("languages", "seed") and not isinstance(v, Mapping)]
        if stray:
            raise ConfigError(f"unknown top-level config keys: {stray}")
        return cls(langs, seed, sections)

    @classmethod
    def load(cls, path: PathLike) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                obj = json.load(f)
        except OSError as exc:
            raise CorpusIOError(exc.strerror or str(exc), str(path)) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        return cls.from_dict(obj)
