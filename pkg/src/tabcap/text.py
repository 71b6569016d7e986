"""Shared text utilities: the tokenizer used by retrieval and metrics."""

from __future__ import annotations

import re

# Decimal numbers stay whole ("10.97"); everything else splits on
# whitespace and punctuation. No stopword removal, no stemming here.
_TOKEN_RE = re.compile(r"\d+\.\d+|\w+")

_SPACE_BEFORE_PUNCT_RE = re.compile(r"\s+([.,;:!?%)\]])")
_SPACE_AFTER_OPEN_RE = re.compile(r"([(\[])\s+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation, keeping numerals."""
    return _TOKEN_RE.findall(text.lower())


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs and reattach punctuation to its word."""
    collapsed = " ".join(text.split())
    collapsed = _SPACE_BEFORE_PUNCT_RE.sub(r"\1", collapsed)
    return _SPACE_AFTER_OPEN_RE.sub(r"\1", collapsed)
