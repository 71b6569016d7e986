"""Prompt assembly for the two generation styles."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .layout import PageRecord
from .retrieval import RetrievalConfig, retrieve_for_record
from .tables import Table, Variant, linearize, strip_numerals


class Style(str, Enum):
    SEPARATOR = "sep"
    PLAIN = "plain"


SEPARATOR_TOKEN = "</s>"
DEFAULT_BUDGETS = {Style.SEPARATOR: 512, Style.PLAIN: 1024}


class CaptionTooShortError(ValueError):
    pass


class PromptBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class CaptionSplit:
    first: str
    rest: str


def split_caption(sentences: Sequence[str]) -> CaptionSplit:
    """First caption sentence becomes the prefix, the rest the target."""
    if len(sentences) < 2:
        raise CaptionTooShortError("no target")
    return CaptionSplit(first=sentences[0], rest=" ".join(sentences[1:]))


@dataclass
class PromptSpec:
    tabular_tokens: list[str]
    sentences: list[str]
    first_caption_sentence: str
    style: Style
    max_length: int = 0

    def __post_init__(self):
        if not self.first_caption_sentence.strip():
            raise ValueError("first caption sentence must be non-empty")
        if self.max_length == 0:
            self.max_length = DEFAULT_BUDGETS[self.style]
        if self.max_length <= 0:
            raise ValueError("max_length must be positive")


def assemble(spec: PromptSpec) -> str:
    """Join tabular tokens, retrieved sentences, and the caption prefix.

    The separator style inserts a single "</s>" before the caption
    prefix; the plain style concatenates directly. Empty portions are
    skipped so the output never carries doubled spaces.
    """
    parts = [" ".join(spec.tabular_tokens), " ".join(spec.sentences)]
    if spec.style is Style.SEPARATOR:
        parts.append(SEPARATOR_TOKEN)
    parts.append(spec.first_caption_sentence)
    return " ".join(p for p in parts if p)


def truncate(spec: PromptSpec, prompt: str) -> str:
    """Trim the prompt to `spec.max_length` whitespace tokens.

    The tabular portion loses words from its tail first, then the
    retrieved-sentence block from its end; the caption prefix and the
    separator are never touched. Already-fitting prompts come back
    unchanged, so the operation is idempotent.
    """
    words = prompt.split()
    first_len = len(spec.first_caption_sentence.split())
    tail_len = first_len + (1 if spec.style is Style.SEPARATOR else 0)
    if tail_len > spec.max_length:
        raise PromptBudgetError("prompt budget exhausted")
    if len(words) <= spec.max_length:
        return prompt
    head = words[: len(words) - tail_len]
    tail = words[len(words) - tail_len:]
    sentence_total = sum(len(s.split()) for s in spec.sentences)
    sent_keep = min(sentence_total, len(head))
    tab_total = len(head) - sent_keep
    tab_keep = tab_total
    overflow = len(head) - (spec.max_length - tail_len)
    cut = min(overflow, tab_keep)
    tab_keep -= cut
    overflow -= cut
    if overflow > 0:
        sent_keep -= overflow
    kept = head[:tab_keep] + head[tab_total: tab_total + sent_keep]
    return " ".join(kept + tail)


@dataclass
class PromptBuild:
    record_id: str
    prompt: str
    target: str


def build_prompt(
    record: PageRecord,
    variant: Variant,
    style: Style,
    retrieval: RetrievalConfig,
    max_length: int = 0,
    drop_numerals: bool = True,
) -> PromptBuild:
    """Full per-record pipeline: linearize, retrieve, assemble, truncate."""
    split = split_caption(record.caption)
    tabular = linearize(Table(rows=record.table), variant)
    if drop_numerals:
        tabular = strip_numerals(tabular)
    sentences = retrieve_for_record(record, retrieval)
    spec = PromptSpec(
        tabular_tokens=tabular,
        sentences=sentences,
        first_caption_sentence=split.first,
        style=style,
        max_length=max_length,
    )
    prompt = truncate(spec, assemble(spec))
    return PromptBuild(record_id=record.page_id, prompt=prompt, target=split.rest)
