"""BM25 sentence retrieval and table-indicator matching."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .layout import PageRecord
from .tables import Table, Variant, linearize
from .text import tokenize


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("k1 must be non-negative")
        if not 0 <= self.b <= 1:
            raise ValueError("b must lie in [0, 1]")


@dataclass
class SentenceIndex:
    sentences: list[str]
    doc_tokens: list[list[str]]
    doc_counts: list[Counter]
    doc_freq: Counter
    avgdl: float

    @property
    def size(self) -> int:
        return len(self.sentences)


def build_index(sentences: Sequence[str]) -> SentenceIndex:
    """Tokenize sentences and precompute BM25 statistics."""
    if not sentences:
        raise ValueError("no sentences")
    doc_tokens = [tokenize(s) for s in sentences]
    doc_counts = [Counter(toks) for toks in doc_tokens]
    doc_freq = Counter()
    for counts in doc_counts:
        doc_freq.update(counts.keys())
    avgdl = sum(len(toks) for toks in doc_tokens) / len(doc_tokens)
    return SentenceIndex(
        sentences=list(sentences),
        doc_tokens=doc_tokens,
        doc_counts=doc_counts,
        doc_freq=doc_freq,
        avgdl=avgdl,
    )


def bm25_score(
    query_tokens: Sequence[str],
    sentence_id: int,
    index: SentenceIndex,
    params: Bm25Params = Bm25Params(),
) -> float:
    """Sum of per-term BM25 contributions for one sentence."""
    if not 0 <= sentence_id < index.size:
        raise ValueError(f"unknown sentence id: {sentence_id}")
    counts = index.doc_counts[sentence_id]
    length = len(index.doc_tokens[sentence_id])
    n = index.size
    score = 0.0
    for term in query_tokens:
        tf = counts.get(term, 0)
        if tf == 0:
            continue
        df = index.doc_freq[term]
        idf = math.log((n - df + 0.5) / (df + 0.5) + 1)
        norm = tf + params.k1 * (1 - params.b + params.b * length / index.avgdl)
        score += idf * tf * (params.k1 + 1) / norm
    return score


@dataclass(frozen=True)
class RetrievedSentence:
    position: int
    text: str
    score: float


def top_n(
    query_tokens: Sequence[str],
    n: int,
    index: SentenceIndex,
    params: Bm25Params = Bm25Params(),
) -> list[RetrievedSentence]:
    """Best-scoring sentences, ties broken by earlier corpus position.

    Sentences scoring zero never appear, so fewer than `n` results come
    back when the query barely overlaps the corpus.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    scored = [
        (bm25_score(query_tokens, i, index, params), i) for i in range(index.size)
    ]
    ranked = sorted(
        ((s, i) for s, i in scored if s > 0.0), key=lambda si: (-si[0], si[1])
    )
    return [
        RetrievedSentence(position=i, text=index.sentences[i], score=s)
        for s, i in ranked[:n]
    ]


# Leading "Table <number>" with an optional trailing ":" or "." mark.
_INDICATOR_RE = re.compile(r"^\s*Table\s+(\d+|[IVXLCDM]+)(?=$|[\s:.,;)\]])")


def table_indicator(caption_first_sentence: str) -> str | None:
    """Extract the table indicator from the caption's leading text."""
    m = _INDICATOR_RE.match(caption_first_sentence)
    return f"Table {m.group(1)}" if m else None


def author_match(
    caption_first_sentence: str, sentences: Sequence[str]
) -> list[str]:
    """First body sentence mentioning the caption's table indicator.

    Matching is case-sensitive on "Table" and insensitive to the
    trailing punctuation mark. Returns an empty list when the caption
    carries no indicator or nothing mentions it.
    """
    indicator = table_indicator(caption_first_sentence)
    if indicator is None:
        return []
    number = indicator.split()[1]
    pattern = re.compile(
        rf"(?<![A-Za-z0-9])Table\s+{re.escape(number)}(?![A-Za-z0-9])"
    )
    for sentence in sentences:
        if pattern.search(sentence):
            return [sentence]
    return []


@dataclass
class RetrievalConfig:
    """Which sentences to put in front of the caption prefix."""

    method: str  # "none" | "top" | "author"
    n: int = 0
    params: Bm25Params = field(default_factory=Bm25Params)

    def __post_init__(self):
        if self.method not in ("none", "top", "author"):
            raise ValueError(f"unknown retrieval method: {self.method}")
        if self.method == "top" and self.n < 1:
            raise ValueError("top-n retrieval needs n >= 1")

    @classmethod
    def from_string(
        cls, spec: str, params: Bm25Params | None = None
    ) -> "RetrievalConfig":
        params = params or Bm25Params()
        m = re.fullmatch(r"top(\d+)", spec)
        if m:
            return cls(method="top", n=int(m.group(1)), params=params)
        if spec in ("none", "author"):
            return cls(method=spec, params=params)
        raise ValueError(f"unknown retrieval method: {spec}")

    def label(self) -> str:
        return f"top{self.n}" if self.method == "top" else self.method


def whole_table_query(record: PageRecord) -> list[str]:
    """Retrieval query: every cell of the table, numerals intact."""
    return tokenize(" ".join(linearize(Table(rows=record.table), Variant.WHOLE)))


def retrieve_for_record(record: PageRecord, config: RetrievalConfig) -> list[str]:
    """Run the configured retrieval method over one record's body."""
    if config.method == "none":
        return []
    if config.method == "author":
        first = record.caption[0] if record.caption else ""
        return author_match(first, record.sentences)
    index = build_index(record.sentences)
    hits = top_n(whole_table_query(record), config.n, index, config.params)
    return [hit.text for hit in hits]
