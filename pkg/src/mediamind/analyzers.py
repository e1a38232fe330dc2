"""Deterministic built-in analyzers: transcription, sentiment, NER, summarization.

All analyzers are pure functions of their arguments so results are exactly
reproducible and desk-checkable. They sit behind the ``AnalyzerBackend``
interface; a remote adapter (``mediamind.remote``) can satisfy the same
contracts with hosted models.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .errors import TranscriptionError, ValidationError
from .ingest import MediaItem

ENTITY_TYPES = ("PERSON", "ORG", "LOC")
SENTIMENT_LABELS = ("positive", "negative", "neutral")
TRANSCRIPT_SOURCES = ("body-text", "sidecar", "remote-asr")

# Label thresholds: positive above +0.1, negative below -0.1, neutral between.
POSITIVE_THRESHOLD = 0.1
NEGATIVE_THRESHOLD = -0.1

# Tokens matched by a negator within this many preceding tokens flip sign.
NEGATION_WINDOW = 3

_NONSPACE = re.compile(r"\S+")


@dataclass
class Transcript:
    item_id: str
    text: str
    source: str  # one of TRANSCRIPT_SOURCES

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "text": self.text, "source": self.source}

    @classmethod
    def from_dict(cls, data: dict) -> Transcript:
        return cls(item_id=data["item_id"], text=data["text"], source=data["source"])


@dataclass
class Lexicon:
    """Token polarity weights plus negator tokens for one language."""

    language: str
    entries: dict[str, float] = field(default_factory=dict)
    negators: frozenset[str] = frozenset()

    def validate(self) -> None:
        for token, weight in self.entries.items():
            if not token or token != token.lower() or any(ch.isspace() for ch in token):
                raise ValidationError(f"lexicon token {token!r} must be lowercase without whitespace")
            if not -1.0 <= weight <= 1.0:
                raise ValidationError(f"lexicon weight for {token!r} out of [-1, 1]: {weight}")


@dataclass
class SentimentResult:
    score: float
    label: str
    matched_tokens: int

    def to_dict(self) -> dict:
        return {"score": self.score, "label": self.label, "matched_tokens": self.matched_tokens}

    @classmethod
    def from_dict(cls, data: dict) -> SentimentResult:
        return cls(score=data["score"], label=data["label"], matched_tokens=data["matched_tokens"])


@dataclass
class Gazetteer:
    """Lowercase surface phrases mapped to entity types for one language."""

    language: str
    entries: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        for phrase, etype in self.entries.items():
            if not phrase or phrase != phrase.strip():
                raise ValidationError(f"gazetteer phrase {phrase!r} must be non-empty and trimmed")
            if phrase != phrase.lower():
                raise ValidationError(f"gazetteer phrase {phrase!r} must be lowercase")
            if etype not in ENTITY_TYPES:
                raise ValidationError(f"unknown entity type {etype!r} for phrase {phrase!r}")


@dataclass
class EntitySpan:
    surface: str
    type: str
    start: int
    end: int

    def to_dict(self) -> dict:
        return {"surface": self.surface, "type": self.type, "start": self.start, "end": self.end}

    @classmethod
    def from_dict(cls, data: dict) -> EntitySpan:
        return cls(surface=data["surface"], type=data["type"], start=data["start"], end=data["end"])


@dataclass
class Summary:
    text: str
    sentence_indices: list[int]

    def to_dict(self) -> dict:
        return {"text": self.text, "sentence_indices": list(self.sentence_indices)}

    @classmethod
    def from_dict(cls, data: dict) -> Summary:
        return cls(text=data["text"], sentence_indices=list(data["sentence_indices"]))


def tokenize_with_offsets(text: str) -> list[tuple[str, int, int]]:
    """Tokenize, keeping each token's [start, end) character offsets.

    Rules: split on Unicode whitespace; strip leading/trailing non-alphanumeric
    characters from each chunk (internal punctuation stays, so "acme-corp" is
    one token); lowercase; drop chunks that strip to nothing.
    """
    out = []
    for m in _NONSPACE.finditer(text):
        start, end = m.start(), m.end()
        while start < end and not text[start].isalnum():
            start += 1
        while end > start and not text[end - 1].isalnum():
            end -= 1
        if end > start:
            out.append((text[start:end].lower(), start, end))
    return out


def tokenize(text: str) -> list[str]:
    return [tok for tok, _, _ in tokenize_with_offsets(text)]


def transcribe(item: MediaItem) -> Transcript:
    """Produce the text to analyze for an item.

    text -> body_text; audio/video -> full content of the transcript sidecar
    (the mock-ASR contract); image -> empty transcript.
    """
    if item.modality == "text":
        return Transcript(item_id=item.id, text=item.body_text or "", source="body-text")
    if item.modality in ("audio", "video"):
        if not item.transcript_sidecar:
            raise TranscriptionError(item.id, "transcript sidecar not set")
        try:
            text = Path(item.transcript_sidecar).read_text(encoding="utf-8")
        except OSError as exc:
            raise TranscriptionError(item.id, f"cannot read sidecar: {exc}") from exc
        return Transcript(item_id=item.id, text=text, source="sidecar")
    return Transcript(item_id=item.id, text="", source="body-text")


def label_for_score(score: float) -> str:
    if score > POSITIVE_THRESHOLD:
        return "positive"
    if score < NEGATIVE_THRESHOLD:
        return "negative"
    return "neutral"


def analyze_sentiment(text: str, lexicon: Lexicon) -> SentimentResult:
    """Mean of signed lexicon weights over matched tokens.

    A matched token's weight is flipped when any of the 3 immediately
    preceding tokens is a negator. With no matches the score is 0 (neutral);
    weights are bounded by [-1, 1], so the mean always is too.
    """
    tokens = tokenize(text)
    total = 0.0
    matched = 0
    for i, token in enumerate(tokens):
        weight = lexicon.entries.get(token)
        if weight is None:
            continue
        if any(prev in lexicon.negators for prev in tokens[max(0, i - NEGATION_WINDOW):i]):
            weight = -weight
        total += weight
        matched += 1
    score = total / matched if matched else 0.0
    return SentimentResult(score=score, label=label_for_score(score), matched_tokens=matched)


def extract_entities(text: str, gazetteer: Gazetteer) -> list[EntitySpan]:
    """Longest-match gazetteer NER, left to right, token-boundary aligned.

    At each token position the longest matching phrase wins and scanning
    resumes after it, so spans never overlap. Output is ordered by start
    offset; each surface is the exact text slice.
    """
    tokens = tokenize_with_offsets(text)
    by_first: dict[str, list[tuple[tuple[str, ...], str]]] = {}
    for phrase, etype in gazetteer.entries.items():
        ptokens = tuple(tokenize(phrase))
        if ptokens:
            by_first.setdefault(ptokens[0], []).append((ptokens, etype))
    for candidates in by_first.values():
        candidates.sort(key=lambda c: len(c[0]), reverse=True)

    spans: list[EntitySpan] = []
    i = 0
    n = len(tokens)
    while i < n:
        advanced = False
        for ptokens, etype in by_first.get(tokens[i][0], ()):
            length = len(ptokens)
            if i + length <= n and tuple(t[0] for t in tokens[i:i + length]) == ptokens:
                start = tokens[i][1]
                end = tokens[i + length - 1][2]
                spans.append(EntitySpan(surface=text[start:end], type=etype, start=start, end=end))
                i += length
                advanced = True
                break
        if not advanced:
            i += 1
    return spans


def split_sentences(text: str) -> list[str]:
    """Split on '.', '?' or '!' followed by whitespace or end of text."""
    sentences = []
    chunk_start = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch in ".?!" and (i + 1 >= n or text[i + 1].isspace()):
            chunk = text[chunk_start:i + 1].strip()
            if chunk:
                sentences.append(chunk)
            chunk_start = i + 1
    tail = text[chunk_start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def summarize(text: str, max_sentences: int, stopwords: frozenset[str] = frozenset()) -> Summary:
    """Extractive summary: pick the highest-scoring sentences.

    A sentence scores the sum, over its non-stopword tokens, of that token's
    frequency within the whole text. Ties go to the earlier sentence. The
    selected sentences are emitted in original order, space-joined.
    """
    if max_sentences < 1:
        raise ValidationError("max_sentences must be >= 1")
    sentences = split_sentences(text)
    freq = Counter(t for t in tokenize(text) if t not in stopwords)
    scored = []
    for idx, sentence in enumerate(sentences):
        score = sum(freq[t] for t in tokenize(sentence) if t not in stopwords)
        scored.append((idx, score))
    chosen = sorted(scored, key=lambda pair: (-pair[1], pair[0]))[:max_sentences]
    indices = sorted(idx for idx, _ in chosen)
    return Summary(text=" ".join(sentences[i] for i in indices), sentence_indices=indices)


def extract_topics(text: str, k: int, stopwords: frozenset[str] = frozenset()) -> list[str]:
    """Top-k non-stopword tokens by frequency; ties break lexicographically."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    freq = Counter(t for t in tokenize(text) if t not in stopwords)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    return [token for token, _ in ranked[:k]]


class AnalyzerBackend(Protocol):
    """Uniform interface over the analysis operations, routed by language."""

    def transcribe(self, item: MediaItem) -> Transcript: ...

    def sentiment(self, text: str, language: str) -> SentimentResult: ...

    def entities(self, text: str, language: str) -> list[EntitySpan]: ...

    def summary(self, text: str, max_sentences: int, language: str) -> Summary: ...

    def topics(self, text: str, k: int, language: str) -> list[str]: ...


class BuiltinBackend:
    """Backend over the deterministic analyzers and a resource bundle.

    Items whose language has no shipped resources fall back to the empty
    "und" resources: neutral sentiment, no entities, stopword-free scoring.
    """

    def __init__(self, bundle):
        self.bundle = bundle

    def transcribe(self, item: MediaItem) -> Transcript:
        return transcribe(item)

    def sentiment(self, text: str, language: str) -> SentimentResult:
        return analyze_sentiment(text, self.bundle.for_language(language).lexicon)

    def entities(self, text: str, language: str) -> list[EntitySpan]:
        return extract_entities(text, self.bundle.for_language(language).gazetteer)

    def summary(self, text: str, max_sentences: int, language: str) -> Summary:
        return summarize(text, max_sentences, self.bundle.for_language(language).stopwords)

    def topics(self, text: str, k: int, language: str) -> list[str]:
        return extract_topics(text, k, self.bundle.for_language(language).stopwords)
