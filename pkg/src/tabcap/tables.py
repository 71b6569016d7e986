"""Table reconstruction from table tokens and cell linearization."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .layout import BAND_OVERLAP, SemanticToken, band_tokens
from .text import normalize_ws

CELL_GAP = 15.0  # horizontal gap (units) that separates two cells


class Variant(str, Enum):
    """Which cells feed the prompt's tabular portion."""

    ROW_HEADER = "rh"
    OTHERS = "ro"
    WHOLE = "rw"


class EmptyTableError(ValueError):
    pass


@dataclass
class Table:
    rows: list[list[str]] = field(default_factory=list)

    def row_header(self, i: int) -> str:
        return self.rows[i][0]


def reconstruct_table(
    tokens: Sequence[SemanticToken],
    band_overlap: float = BAND_OVERLAP,
    cell_gap: float = CELL_GAP,
) -> Table:
    """Rebuild rows and cells from table-labeled tokens.

    Rows are the reading-order bands; within a row, tokens closer than
    `cell_gap` units horizontally merge into one cell. Ragged rows are
    kept as-is.
    """
    if not tokens:
        raise EmptyTableError("empty table")
    rows: list[list[str]] = []
    for band in band_tokens(tokens, band_overlap):
        cells: list[list[str]] = [[band[0].text]]
        reach = band[0].x1
        for tok in band[1:]:
            if tok.x0 - reach < cell_gap:
                cells[-1].append(tok.text)
            else:
                cells.append([tok.text])
            reach = max(reach, tok.x1)
        rows.append([normalize_ws(" ".join(parts)) for parts in cells])
    return Table(rows=rows)


def linearize(table: Table, variant: Variant, header_axis: str = "row") -> list[str]:
    """Flatten table cells into a word sequence for the given variant.

    `header_axis="row"` treats each row's first cell as its header;
    `header_axis="first_row"` treats the whole first row as the header.
    """
    if header_axis not in ("row", "first_row"):
        raise ValueError(f"unknown header axis: {header_axis}")
    if header_axis == "row":
        header_cells = [row[0] for row in table.rows if row]
        other_cells = [cell for row in table.rows for cell in row[1:]]
    else:
        header_cells = list(table.rows[0]) if table.rows else []
        other_cells = [cell for row in table.rows[1:] for cell in row]

    if variant is Variant.WHOLE:
        cells = [cell for row in table.rows for cell in row]
    elif variant is Variant.ROW_HEADER:
        cells = header_cells
    elif variant is Variant.OTHERS:
        cells = other_cells
    else:
        raise ValueError(f"unknown variant: {variant}")
    return [word for cell in cells for word in cell.split()]


# A numeral token: optional sign, digits with optional grouping commas,
# optional decimal part, exponent, or trailing percent; fragments glued
# by "--", "x", "+-" or "/" still count, as do bracketed forms like
# "(0.21)" and mangled exponents like "10--4".
_NUM_CORE = r"[+\-−]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:[eE][+\-]?\d+)?%?"
_NUM_JOINED = rf"{_NUM_CORE}(?:(?:--|×|±|/){_NUM_CORE})*"
_NUMERAL_RE = re.compile(rf"^[(\[]?{_NUM_JOINED}[)\]]?[.,;:]?$")


def is_numeral(token: str) -> bool:
    return bool(_NUMERAL_RE.match(token))


def strip_numerals(tokens: Sequence[str]) -> list[str]:
    """Drop numeral tokens; idempotent by construction."""
    return [t for t in tokens if not is_numeral(t)]
