"""Shared fixture builders: annotated pages and synthetic record corpora."""

from __future__ import annotations

import random

from tabcap.layout import PageLayout, PageRecord, parse_page


def line(
    text: str,
    x0: int,
    y0: int,
    *,
    w: int = 40,
    h: int = 10,
    label: str = "paragraph",
    font: str = "Arial",
    color: tuple[int, int, int] = (0, 0, 0),
) -> str:
    r, g, b = color
    return f"{text}\t{x0}\t{y0}\t{x0 + w}\t{y0 + h}\t{r}\t{g}\t{b}\t{font}\t{label}"


def band(words: str | list[str], y: int, *, label: str = "paragraph",
         x_start: int = 60, spacing: int = 45, w: int = 40) -> list[str]:
    """Lay words on one horizontal band, left to right."""
    if isinstance(words, str):
        words = words.split()
    return [
        line(word, x_start + i * spacing, y, w=w, label=label)
        for i, word in enumerate(words)
    ]


def table_rows(rows: list[list[str]], y_start: int = 500, *,
               row_step: int = 20, label: str = "table") -> list[str]:
    """One fixture cell per word, cells 200 units apart (> cell gap)."""
    lines = []
    for r, row in enumerate(rows):
        y = y_start + r * row_step
        for c, cell in enumerate(row):
            for k, word in enumerate(cell.split()):
                # words within a cell sit 5 units apart (< cell gap)
                lines.append(line(word, 100 + c * 200 + k * 45, y, label=label))
    return lines


def _body_four_sentences() -> list[str]:
    lines = []
    lines += band("The mean of alpha grows with the setting value .", 100)
    lines += band("We report the spread of beta in Table 3 .", 130)
    lines += band("All quantities are averaged over many runs .", 160)
    lines += band("The setup follows the standard procedure .", 190)
    return lines


def valid_page_lines() -> list[str]:
    """Single column, one 3-row table, 4 body sentences, 2-sentence caption."""
    lines = _body_four_sentences()
    lines += table_rows(
        [
            ["quantity", "mean", "spread"],
            ["alpha", "1.25", "0.10"],
            ["beta", "2.50", "0.20"],
        ]
    )
    lines += band("The table lists mean values .", 585, label="caption")
    lines += band("Each value is a mean over runs .", 605, label="caption")
    return lines


def indicator_page_lines(number: str = "3") -> list[str]:
    """Valid page whose caption leads with a table indicator."""
    lines = _body_four_sentences()
    lines += table_rows(
        [["setting", "value"], ["alpha", "10.97"], ["beta", "9.84"]]
    )
    lines += band(f"Table {number} : mean values for two settings .", 585,
                  label="caption")
    lines += band("Uncertainties are shown in brackets .", 605, label="caption")
    return lines


def two_table_page_lines() -> list[str]:
    lines = _body_four_sentences()
    lines += table_rows([["a", "1"], ["b", "2"]], y_start=500)
    lines += table_rows([["c", "3"], ["d", "4"]], y_start=740)
    lines += band("The table lists mean values .", 585, label="caption")
    lines += band("Each value is a mean over runs .", 605, label="caption")
    return lines


def two_column_page_lines() -> list[str]:
    """Paragraph midpoints form two clusters separated by > 150 units."""
    lines = []
    left = "The mean of alpha grows with the value .".split()
    right = "We report the spread of beta here now .".split()
    for i, word in enumerate(left):
        lines.append(line(word, 60 + (i % 3) * 60, 100 + (i // 3) * 20, label="paragraph"))
    for i, word in enumerate(right):
        lines.append(line(word, 620 + (i % 3) * 60, 100 + (i // 3) * 20, label="paragraph"))
    lines += band("All quantities are averaged over many runs .", 300)
    lines += table_rows([["a", "1"], ["b", "2"]])
    lines += band("The table lists mean values .", 585, label="caption")
    lines += band("Each value is a mean over runs .", 605, label="caption")
    return lines


def two_sentence_page_lines() -> list[str]:
    lines = []
    lines += band("The mean of alpha grows with the setting value .", 100)
    lines += band("All quantities are averaged over many runs .", 130)
    lines += band("Also the spread stays small without any", 160)  # incomplete
    lines += table_rows([["a", "1"], ["b", "2"]])
    lines += band("The table lists mean values .", 585, label="caption")
    lines += band("Each value is a mean over runs .", 605, label="caption")
    return lines


def no_table_page_lines() -> list[str]:
    lines = _body_four_sentences()
    lines += band("The table lists mean values .", 585, label="caption")
    return lines


def no_paragraph_page_lines() -> list[str]:
    lines = table_rows([["a", "1"], ["b", "2"]])
    lines += band("The table lists mean values .", 585, label="caption")
    return lines


def fragment_tail_page_lines() -> list[str]:
    """Three complete sentences plus an unfinished tail: still accepted."""
    lines = []
    lines += band("The mean of alpha grows with the setting value .", 100)
    lines += band("We report the spread of beta in Table 3 .", 130)
    lines += band("All quantities are averaged over many runs .", 160)
    lines += band("Finally the page break cuts this", 190)
    lines += table_rows([["a", "1"], ["b", "2"]])
    lines += band("The table lists mean values .", 585, label="caption")
    lines += band("Each value is a mean over runs .", 605, label="caption")
    return lines


def abbreviation_page_lines() -> list[str]:
    """Abbreviations and initials must not split body sentences."""
    lines = []
    lines += band("The results in Fig . 2 match those of J . Smith .", 100)
    lines += band("See Eq . 4 for the full derivation of the mean .", 130)
    lines += band("All quantities are averaged over many runs .", 160)
    lines += table_rows([["a", "1"], ["b", "2"]])
    lines += band("The table lists mean values .", 585, label="caption")
    lines += band("Each value is a mean over runs .", 605, label="caption")
    return lines


def far_caption_page_lines() -> list[str]:
    """Two caption groups; the one nearer the table wins."""
    lines = _body_four_sentences()
    lines += band("A figure caption far from the table .", 40, label="caption")
    lines += table_rows([["a", "1"], ["b", "2"]])
    lines += band("The table lists mean values .", 585, label="caption")
    lines += band("Each value is a mean over runs .", 605, label="caption")
    return lines


def caption_above_page_lines() -> list[str]:
    lines = _body_four_sentences()
    lines += band("The table lists mean values .", 450, label="caption")
    lines += band("Each value is a mean over runs .", 470, label="caption")
    lines += table_rows([["a", "1"], ["b", "2"]])
    return lines


def roman_indicator_page_lines() -> list[str]:
    lines = _body_four_sentences()
    lines += table_rows([["a", "1"], ["b", "2"]])
    lines += band("Table II : mean values over runs .", 585, label="caption")
    lines += band("Uncertainties are shown in brackets .", 605, label="caption")
    return lines


def attached_punct_page_lines() -> list[str]:
    """Punctuation attached to word tokens instead of standalone dots."""
    lines = []
    lines += band("The mean of alpha grows with the setting value.", 100)
    lines += band("We report the spread of beta in runs.", 130)
    lines += band("All quantities are averaged over many runs.", 160)
    lines += table_rows([["a", "1"], ["b", "2"]])
    lines += band("The table lists mean values.", 585, label="caption")
    lines += band("Each value is a mean over runs.", 605, label="caption")
    return lines


def fixture_pages() -> dict[str, tuple[list[str], bool]]:
    """page_id -> (annotation lines, should the filter accept it)."""
    return {
        "valid": (valid_page_lines(), True),
        "indicator": (indicator_page_lines(), True),
        "roman": (roman_indicator_page_lines(), True),
        "fragment-tail": (fragment_tail_page_lines(), True),
        "abbrev": (abbreviation_page_lines(), True),
        "far-caption": (far_caption_page_lines(), True),
        "caption-above": (caption_above_page_lines(), True),
        "attached-punct": (attached_punct_page_lines(), True),
        "two-table": (two_table_page_lines(), False),
        "two-column": (two_column_page_lines(), False),
        "two-sentence": (two_sentence_page_lines(), False),
        "no-table": (no_table_page_lines(), False),
        "no-paragraph": (no_paragraph_page_lines(), False),
    }


def parse_fixture(page_id: str) -> PageLayout:
    lines, _ = fixture_pages()[page_id]
    return parse_page(lines, page_id=page_id)


_VOCAB = (
    "energy radiation shower zenith angle mean table value spread setting "
    "atmosphere level sea model run seed depth profile signal noise detector "
    "array grid cell south degree"
).split()


def synth_sentence(rng: random.Random, k: int) -> str:
    words = [rng.choice(_VOCAB) for _ in range(k)]
    return (" ".join(words)).capitalize() + "."


def synth_corpus(n: int = 207, seed: int = 11) -> list[PageRecord]:
    """Deterministic record corpus for grid runs."""
    rng = random.Random(seed)
    records = []
    for i in range(n):
        sentences = [
            synth_sentence(rng, rng.randint(6, 12))
            for _ in range(rng.randint(4, 8))
        ]
        number = i % 9 + 1
        if rng.random() < 0.6:
            sentences.insert(
                rng.randrange(len(sentences) + 1),
                f"The values in Table {number} support this.",
            )
        caption = []
        if rng.random() < 0.7:
            caption.append(f"Table {number}: {synth_sentence(rng, 5).lower()}")
        else:
            caption.append(synth_sentence(rng, 6))
        for _ in range(rng.randint(1, 3)):
            caption.append(synth_sentence(rng, rng.randint(4, 9)))
        table = []
        for _ in range(rng.randint(2, 4)):
            row = []
            for _ in range(rng.randint(1, 4)):
                if rng.random() < 0.4:
                    row.append(f"{rng.uniform(0, 30):.2f}")
                else:
                    row.append(" ".join(rng.choice(_VOCAB) for _ in range(rng.randint(1, 3))))
            table.append(row)
        records.append(
            PageRecord(
                page_id=f"p{i:04d}",
                sentences=sentences,
                caption=caption,
                table=table,
            )
        )
    return records
