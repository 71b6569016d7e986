"""Parsing, ordering, and filtering of token-level page annotations.

Input pages follow the DocBank convention: one token per line, ten
tab-separated fields (text, bbox corners, RGB color, font, label) on a
0-1000 coordinate grid with the origin at the top-left corner.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .text import normalize_ws

LABELS = frozenset({
    "paragraph", "table", "caption", "section", "title", "abstract",
    "figure", "list", "footer", "reference", "equation", "author",
    "date", "other",
})

# Heuristic thresholds, in coordinate units unless noted.
BAND_OVERLAP = 0.5      # fraction of the smaller token height
COLUMN_GAP = 150.0      # midpoint gap that signals a second column
COLUMN_MIN_SIDE = 0.2   # fraction of tokens required on each side of a gap
TABLE_GAP = 30.0        # vertical gap that still joins table token groups
MIN_SENTENCES = 3

# Words whose trailing period never ends a sentence.
ABBREVIATIONS = frozenset({
    "fig", "figs", "eq", "eqs", "etc", "vs", "cf", "dr", "mr", "mrs",
    "ms", "prof", "vol", "sec", "al", "e.g", "i.e", "resp", "approx",
})

_TERMINATORS = (".", "?", "!")


class AnnotationError(ValueError):
    """Malformed annotation line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CoordinateRangeError(AnnotationError):
    """Bounding box coordinate outside the 0-1000 grid or inverted."""


class IndeterminateLayoutError(ValueError):
    """Column count cannot be estimated (no paragraph tokens)."""


class RecordRejectedError(ValueError):
    """Page failed an admission criterion; names the criterion."""

    def __init__(self, criterion: str):
        super().__init__(criterion)
        self.criterion = criterion


@dataclass(frozen=True)
class SemanticToken:
    text: str
    x0: float
    y0: float
    x1: float
    y1: float
    color: tuple[int, int, int]
    font: str
    label: str

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def x_mid(self) -> float:
        return (self.x0 + self.x1) / 2


@dataclass
class PageLayout:
    page_id: str
    tokens: list[SemanticToken] = field(default_factory=list)

    def with_label(self, label: str) -> list[SemanticToken]:
        return [t for t in self.tokens if t.label == label]


@dataclass
class PageRecord:
    page_id: str
    sentences: list[str]
    caption: list[str]
    table: list[list[str]]

    def to_dict(self) -> dict:
        return {
            "page_id": self.page_id,
            "sentences": list(self.sentences),
            "caption": list(self.caption),
            "table": [list(row) for row in self.table],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict) -> "PageRecord":
        try:
            page_id = data["page_id"]
            sentences = data["sentences"]
            caption = data["caption"]
            table = data["table"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"record missing field: {exc}") from exc
        if not isinstance(page_id, str):
            raise ValueError("page_id must be a string")
        if not all(isinstance(s, str) for s in sentences):
            raise ValueError("sentences must be strings")
        if not all(isinstance(s, str) for s in caption):
            raise ValueError("caption must be strings")
        if not all(isinstance(c, str) for row in table for c in row):
            raise ValueError("table cells must be strings")
        return cls(
            page_id=page_id,
            sentences=list(sentences),
            caption=list(caption),
            table=[list(row) for row in table],
        )

    @classmethod
    def from_json(cls, text: str) -> "PageRecord":
        return cls.from_dict(json.loads(text))


def parse_page(lines: Iterable[str], page_id: str = "") -> PageLayout:
    """Parse annotation lines into a PageLayout; blank lines are ignored."""
    tokens: list[SemanticToken] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 10:
            raise AnnotationError(
                line_no, f"expected 10 tab-separated fields, got {len(fields)}"
            )
        try:
            x0, y0, x1, y1 = (int(v) for v in fields[1:5])
        except ValueError:
            raise AnnotationError(line_no, "non-integer coordinate") from None
        try:
            r, g, b = (int(v) for v in fields[5:8])
        except ValueError:
            raise AnnotationError(line_no, "non-integer color channel") from None
        for v in (x0, y0, x1, y1):
            if not 0 <= v <= 1000:
                raise CoordinateRangeError(
                    line_no, f"coordinate {v} outside 0-1000"
                )
        if x0 > x1 or y0 > y1:
            raise CoordinateRangeError(line_no, "inverted bounding box")
        label = fields[9].strip().lower()
        if label not in LABELS:
            label = "other"
        tokens.append(
            SemanticToken(
                text=fields[0],
                x0=float(x0), y0=float(y0), x1=float(x1), y1=float(y1),
                color=(r, g, b),
                font=fields[8],
                label=label,
            )
        )
    return PageLayout(page_id=page_id, tokens=tokens)


def _shares_band(a: SemanticToken, b: SemanticToken, overlap: float) -> bool:
    cover = min(a.y1, b.y1) - max(a.y0, b.y0)
    smaller = min(a.height, b.height)
    return cover >= overlap * smaller


def band_tokens(
    tokens: Sequence[SemanticToken], band_overlap: float = BAND_OVERLAP
) -> list[list[SemanticToken]]:
    """Group tokens into horizontal bands, each sorted left to right.

    Tokens are swept top to bottom; a token joins the open band when its
    vertical interval overlaps any member's by at least `band_overlap` of
    the smaller height. Bands come back ordered by top edge; ties keep
    input order.
    """
    indexed = sorted(enumerate(tokens), key=lambda it: (it[1].y0, it[0]))
    bands: list[list[tuple[int, SemanticToken]]] = []
    for idx, tok in indexed:
        if bands and any(
            _shares_band(member, tok, band_overlap) for _, member in bands[-1]
        ):
            bands[-1].append((idx, tok))
        else:
            bands.append([(idx, tok)])
    ordered: list[list[SemanticToken]] = []
    for band in bands:
        band.sort(key=lambda it: (it[1].x0, it[0]))
        ordered.append([tok for _, tok in band])
    return ordered


def reading_order(
    tokens: Sequence[SemanticToken], band_overlap: float = BAND_OVERLAP
) -> list[SemanticToken]:
    """Order tokens top-to-bottom by band, left-to-right within a band."""
    return [tok for band in band_tokens(tokens, band_overlap) for tok in band]


def detect_columns(
    layout: PageLayout,
    gap: float = COLUMN_GAP,
    min_side: float = COLUMN_MIN_SIDE,
) -> int:
    """Return 1 or 2 from the paragraph-midpoint histogram.

    Two columns are reported when some horizontal gap of at least `gap`
    units splits at least `min_side` of the paragraph tokens onto each
    side; otherwise the page counts as single-column.
    """
    mids = sorted(t.x_mid for t in layout.tokens if t.label == "paragraph")
    if not mids:
        raise IndeterminateLayoutError("no paragraph tokens")
    n = len(mids)
    for i in range(n - 1):
        left, right = i + 1, n - i - 1
        if mids[i + 1] - mids[i] >= gap and left >= min_side * n and right >= min_side * n:
            return 2
    return 1


def cluster_vertically(
    tokens: Sequence[SemanticToken], gap: float = TABLE_GAP
) -> list[list[SemanticToken]]:
    """Group tokens whose vertical intervals sit within `gap` units."""
    groups: list[list[SemanticToken]] = []
    reach = 0.0
    for tok in sorted(tokens, key=lambda t: t.y0):
        if groups and tok.y0 - reach <= gap:
            groups[-1].append(tok)
            reach = max(reach, tok.y1)
        else:
            groups.append([tok])
            reach = tok.y1
    return groups


def count_tables(layout: PageLayout, gap: float = TABLE_GAP) -> int:
    """Count vertical clusters of table-labeled tokens."""
    return len(cluster_vertically(layout.with_label("table"), gap))


def _strip_trailing_period(word: str) -> str:
    return word[:-1] if word.endswith(".") else word


def _blocks_split(prev_word: str) -> bool:
    stem = _strip_trailing_period(prev_word)
    if len(stem) == 1 and stem.isalpha() and stem.isupper():
        return True  # single-letter initials such as "J."
    return stem.lower().rstrip(".") in ABBREVIATIONS


def segment_sentences(tokens: Sequence[SemanticToken]) -> list[str]:
    """Split a reading-ordered token stream into sentence strings.

    A terminator (./?/!) ends a sentence when followed by an uppercase
    letter or the end of the stream. Periods after single initials or
    the fixed abbreviation list never split. Concatenating the output
    reproduces the input text modulo whitespace.
    """
    words = [t.text for t in tokens if t.text.strip()]
    sentences: list[str] = []
    current: list[str] = []
    for i, word in enumerate(words):
        current.append(word)
        if not word.endswith(_TERMINATORS):
            continue
        at_end = i + 1 == len(words)
        next_upper = not at_end and words[i + 1][:1].isupper()
        if not (at_end or next_upper):
            continue
        if word.endswith("."):
            # The word the period belongs to: the token itself, or the
            # one before when the period stands alone.
            owner = word if word != "." else (words[i - 1] if i else "")
            if not at_end and _blocks_split(owner):
                continue
        sentences.append(normalize_ws(" ".join(current)))
        current = []
    if current:
        sentences.append(normalize_ws(" ".join(current)))
    return [s for s in sentences if s]


def is_complete_sentence(sentence: str) -> bool:
    return sentence.rstrip().endswith(_TERMINATORS)


def _body_sentences(
    layout: PageLayout, band_overlap: float = BAND_OVERLAP
) -> list[str]:
    ordered = reading_order(layout.with_label("paragraph"), band_overlap)
    return segment_sentences(ordered)


def apply_filter(
    layout: PageLayout,
    band_overlap: float = BAND_OVERLAP,
    column_gap: float = COLUMN_GAP,
    table_gap: float = TABLE_GAP,
    min_sentences: int = MIN_SENTENCES,
) -> bool:
    """True when the page is single-column with exactly one table and
    at least `min_sentences` complete body sentences."""
    try:
        if detect_columns(layout, gap=column_gap) != 1:
            return False
    except IndeterminateLayoutError:
        return False
    if count_tables(layout, gap=table_gap) != 1:
        return False
    complete = [
        s for s in _body_sentences(layout, band_overlap) if is_complete_sentence(s)
    ]
    return len(complete) >= min_sentences


def _interval_gap(a0: float, a1: float, b0: float, b1: float) -> float:
    return max(0.0, a0 - b1, b0 - a1)


def build_record(
    layout: PageLayout,
    band_overlap: float = BAND_OVERLAP,
    column_gap: float = COLUMN_GAP,
    table_gap: float = TABLE_GAP,
    min_sentences: int = MIN_SENTENCES,
) -> PageRecord:
    """Build a PageRecord from an admitted page; reject others."""
    from .tables import reconstruct_table

    if not layout.with_label("paragraph"):
        raise RecordRejectedError("no paragraph tokens")
    if detect_columns(layout, gap=column_gap) != 1:
        raise RecordRejectedError("two-column layout")
    n_tables = count_tables(layout, gap=table_gap)
    if n_tables == 0:
        raise RecordRejectedError("no table")
    if n_tables > 1:
        raise RecordRejectedError("multiple tables")
    complete = [
        s for s in _body_sentences(layout, band_overlap) if is_complete_sentence(s)
    ]
    if len(complete) < min_sentences:
        raise RecordRejectedError("fewer than three complete sentences")

    table_toks = layout.with_label("table")
    table = reconstruct_table(table_toks, band_overlap=band_overlap)

    caption: list[str] = []
    caption_groups = cluster_vertically(layout.with_label("caption"), table_gap)
    if caption_groups:
        t_y0 = min(t.y0 for t in table_toks)
        t_y1 = max(t.y1 for t in table_toks)
        nearest = min(
            caption_groups,
            key=lambda grp: _interval_gap(
                min(t.y0 for t in grp), max(t.y1 for t in grp), t_y0, t_y1
            ),
        )
        caption = segment_sentences(reading_order(nearest, band_overlap))

    return PageRecord(
        page_id=layout.page_id,
        sentences=complete,
        caption=caption,
        table=table.rows,
    )


def read_corpus(stream: TextIO) -> list[PageRecord]:
    """Read newline-delimited PageRecord JSON."""
    records = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            records.append(PageRecord.from_json(line))
        except (ValueError, json.JSONDecodeError) as exc:
            raise ValueError(f"corpus line {line_no}: {exc}") from exc
    return records


def write_corpus(records: Iterable[PageRecord], stream: TextIO) -> None:
    for record in records:
        stream.write(record.to_json())
        stream.write("\n")
