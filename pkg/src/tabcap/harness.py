"""Experiment grid: retrieval conditions x prompt styles -> metric matrix."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

from .genclient import GenerationError, GenRequest, generate_batch
from .layout import PageRecord
from .metrics import METRIC_NAMES, evaluate_corpus
from .prompts import (
    DEFAULT_BUDGETS,
    PromptBudgetError,
    PromptSpec,
    Style,
    assemble,
    split_caption,
    truncate,
)
from .retrieval import (
    Bm25Params,
    author_match,
    build_index,
    top_n,
    whole_table_query,
)
from .tables import Table, Variant, linearize, strip_numerals


class BackendUnreachableError(RuntimeError):
    pass


@dataclass(frozen=True)
class Condition:
    """One column of the result grid."""

    method: str  # "none" | "top" | "author"
    n: int = 0
    variant: Variant | None = None

    def __post_init__(self):
        if self.method not in ("none", "top", "author"):
            raise ValueError(f"unknown condition method: {self.method}")
        if self.method == "top" and (self.n < 1 or self.variant is None):
            raise ValueError("top conditions need n >= 1 and a variant")

    @property
    def label(self) -> str:
        if self.method == "top":
            return f"top{self.n}:{self.variant.value}"
        return self.method

    @property
    def group_label(self) -> str:
        if self.method == "top":
            return f"Top-{self.n} BM25"
        return {"none": "None", "author": "Author"}[self.method]

    @property
    def variant_label(self) -> str:
        return self.variant.value if self.variant else "-"

    @classmethod
    def from_label(cls, label: str) -> "Condition":
        if label in ("none", "author"):
            return cls(method=label)
        head, sep, tail = label.partition(":")
        if sep and head.startswith("top") and head[3:].isdigit():
            return cls(method="top", n=int(head[3:]), variant=Variant(tail))
        raise ValueError(f"unknown condition label: {label}")


CANONICAL_CONDITIONS: tuple[Condition, ...] = (
    Condition(method="none"),
    *(
        Condition(method="top", n=n, variant=variant)
        for n in (1, 2, 3)
        for variant in (Variant.ROW_HEADER, Variant.OTHERS, Variant.WHOLE)
    ),
    Condition(method="author"),
)


@dataclass
class GridConfig:
    styles: tuple[Style, ...] = (Style.SEPARATOR, Style.PLAIN)
    conditions: tuple[Condition, ...] = CANONICAL_CONDITIONS
    bm25: Bm25Params = field(default_factory=Bm25Params)
    budgets: dict[Style, int] = field(default_factory=lambda: dict(DEFAULT_BUDGETS))
    drop_numerals: bool = True
    baseline_variant: Variant = Variant.WHOLE
    max_new_tokens: int = 128
    parallelism: int = 4
    rouge_mode: str = "recall"

    def snapshot(self) -> dict:
        return {
            "styles": [s.value for s in self.styles],
            "conditions": [c.label for c in self.conditions],
            "bm25": {"k1": self.bm25.k1, "b": self.bm25.b},
            "budgets": {s.value: n for s, n in self.budgets.items()},
            "drop_numerals": self.drop_numerals,
            "baseline_variant": self.baseline_variant.value,
            "max_new_tokens": self.max_new_tokens,
            "parallelism": self.parallelism,
            "rouge_mode": self.rouge_mode,
        }


@dataclass
class ResultMatrix:
    """Scores (or error markers) per style, condition, and metric."""

    style_order: list[str]
    condition_order: list[str]
    cells: dict[str, dict[str, dict[str, dict]]]
    provenance: dict = field(default_factory=dict)

    def get(self, style: str, condition: str, metric: str) -> dict:
        return self.cells[style][condition][metric]

    def missing(self) -> list[tuple[str, str, str]]:
        gaps = []
        for style in self.style_order:
            for condition in self.condition_order:
                for metric in METRIC_NAMES:
                    cell = (
                        self.cells.get(style, {}).get(condition, {}).get(metric)
                    )
                    if not isinstance(cell, dict) or (
                        "score" not in cell and "error" not in cell
                    ):
                        gaps.append((style, condition, metric))
        return gaps

    def to_dict(self) -> dict:
        return {
            "style_order": list(self.style_order),
            "condition_order": list(self.condition_order),
            "cells": self.cells,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResultMatrix":
        return cls(
            style_order=list(data["style_order"]),
            condition_order=list(data["condition_order"]),
            cells=data["cells"],
            provenance=data.get("provenance", {}),
        )


@dataclass
class GridRun:
    matrix: ResultMatrix
    # (style, condition label) -> generation rows for generations.jsonl
    generations: dict[tuple[str, str], list[dict]]


def corpus_sha256(records: Sequence[PageRecord]) -> str:
    digest = hashlib.sha256()
    for record in records:
        canonical = json.dumps(
            record.to_dict(), sort_keys=True, ensure_ascii=False,
            separators=(",", ":"),
        )
        digest.update(canonical.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def _condition_sentences(
    condition: Condition,
    record: PageRecord,
    ranked: dict[str, list],
    author_hits: dict[str, list[str]],
) -> list[str]:
    if condition.method == "none":
        return []
    if condition.method == "author":
        return author_hits[record.page_id]
    return [hit.text for hit in ranked[record.page_id][: condition.n]]


def run_grid(
    records: Sequence[PageRecord], backend, config: GridConfig | None = None
) -> GridRun:
    """Run every (style, condition) cell of the grid over the corpus.

    A failed generation (or an unassemblable prompt) marks the five
    metric cells of its condition with the error instead of aborting;
    only a fully failing first batch aborts, since that means the
    backend is unreachable.
    """
    config = config or GridConfig()
    records = list(records)
    if not records:
        raise ValueError("empty corpus")
    for record in records:
        if len(record.caption) < 2:
            raise ValueError(
                f"record {record.page_id!r} has fewer than two caption sentences"
            )
        if not record.table:
            raise ValueError(f"record {record.page_id!r} has no table")

    splits = {r.page_id: split_caption(r.caption) for r in records}
    max_top = max(
        (c.n for c in config.conditions if c.method == "top"), default=0
    )
    ranked: dict[str, list] = {}
    if max_top:
        for record in records:
            index = build_index(record.sentences)
            ranked[record.page_id] = top_n(
                whole_table_query(record), max_top, index, config.bm25
            )
    author_hits: dict[str, list[str]] = {}
    if any(c.method == "author" for c in config.conditions):
        for record in records:
            author_hits[record.page_id] = author_match(
                splits[record.page_id].first, record.sentences
            )

    tabular_cache: dict[tuple[str, Variant], list[str]] = {}

    def tabular_tokens(record: PageRecord, variant: Variant) -> list[str]:
        key = (record.page_id, variant)
        if key not in tabular_cache:
            tokens = linearize(Table(rows=record.table), variant)
            if config.drop_numerals:
                tokens = strip_numerals(tokens)
            tabular_cache[key] = tokens
        return tabular_cache[key]

    style_order = [s.value for s in config.styles]
    condition_order = [c.label for c in config.conditions]
    cells: dict[str, dict[str, dict[str, dict]]] = {
        s: {c: {} for c in condition_order} for s in style_order
    }
    generations: dict[tuple[str, str], list[dict]] = {}
    backend_ids: set[str] = set()
    first_batch = True

    for style in config.styles:
        budget = config.budgets[style]
        for condition in config.conditions:
            variant = condition.variant or config.baseline_variant
            prompts: list[tuple[str, str, str]] = []  # (record_id, prompt, target)
            cell_error: str | None = None
            for record in records:
                try:
                    spec = PromptSpec(
                        tabular_tokens=tabular_tokens(record, variant),
                        sentences=_condition_sentences(
                            condition, record, ranked, author_hits
                        ),
                        first_caption_sentence=splits[record.page_id].first,
                        style=style,
                        max_length=budget,
                    )
                    prompt = truncate(spec, assemble(spec))
                except (PromptBudgetError, ValueError) as exc:
                    cell_error = f"{record.page_id}: {exc}"
                    break
                prompts.append(
                    (record.page_id, prompt, splits[record.page_id].rest)
                )

            rows: list[dict] = []
            if cell_error is None:
                requests = [
                    GenRequest(
                        style=style, prompt=p, max_new_tokens=config.max_new_tokens
                    )
                    for _, p, _ in prompts
                ]
                results = generate_batch(backend, requests, config.parallelism)
                failures = [r for r in results if isinstance(r, GenerationError)]
                if first_batch and len(failures) == len(results):
                    raise BackendUnreachableError(
                        f"first condition produced no responses: {failures[0]}"
                    )
                first_batch = False
                pairs = []
                for (record_id, prompt, target), result in zip(prompts, results):
                    if isinstance(result, GenerationError):
                        continue
                    backend_ids.add(result.backend_id)
                    rows.append(
                        {
                            "record_id": record_id,
                            "prompt": prompt,
                            "continuation": result.continuation,
                            "reference": target,
                        }
                    )
                    pairs.append((result.continuation, target))
                if failures:
                    cell_error = str(failures[0])

            label = condition.label
            if cell_error is not None:
                for metric in METRIC_NAMES:
                    cells[style.value][label][metric] = {"error": cell_error}
            else:
                report = evaluate_corpus(pairs, rouge_mode=config.rouge_mode)
                for metric in METRIC_NAMES:
                    cells[style.value][label][metric] = {
                        "score": report.aggregates[metric]
                    }
            generations[(style.value, label)] = rows

    matrix = ResultMatrix(
        style_order=style_order,
        condition_order=condition_order,
        cells=cells,
        provenance={
            "corpus_sha256": corpus_sha256(records),
            "records": len(records),
            "backend_ids": sorted(backend_ids),
            "config": config.snapshot(),
        },
    )
    return GridRun(matrix=matrix, generations=generations)


def emit_table(matrix: ResultMatrix, fmt: str = "csv") -> str:
    """Render the matrix as CSV (two header rows) or round-trip JSON."""
    gaps = matrix.missing()
    if gaps:
        listed = ", ".join("/".join(gap) for gap in gaps[:8])
        raise ValueError(f"matrix incomplete, missing cells: {listed}")
    if fmt == "json":
        return json.dumps(matrix.to_dict(), ensure_ascii=False, indent=2)
    if fmt != "csv":
        raise ValueError(f"unknown format: {fmt}")
    conditions = [Condition.from_label(c) for c in matrix.condition_order]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["model", "metric"] + [c.group_label for c in conditions])
    writer.writerow(["", ""] + [c.variant_label for c in conditions])
    for style in matrix.style_order:
        for metric in METRIC_NAMES:
            row = [style, metric]
            for condition in matrix.condition_order:
                cell = matrix.get(style, condition, metric)
                row.append(
                    f"{cell['score']:.6f}" if "score" in cell else "ERR"
                )
            writer.writerow(row)
    return out.getvalue()


def compare_best(matrix: ResultMatrix) -> dict[tuple[str, str], list[str]]:
    """Best condition(s) per (style, metric); ties keep canonical order.

    Error cells are skipped with a partial-result warning.
    """
    best: dict[tuple[str, str], list[str]] = {}
    for style in matrix.style_order:
        for metric in METRIC_NAMES:
            scored: list[tuple[str, float]] = []
            errors = 0
            for condition in matrix.condition_order:
                cell = matrix.get(style, condition, metric)
                if "score" in cell:
                    scored.append((condition, cell["score"]))
                else:
                    errors += 1
            if errors:
                warnings.warn(
                    f"{style}/{metric}: {errors} error cell(s) excluded "
                    "from comparison",
                    stacklevel=2,
                )
            if not scored:
                best[(style, metric)] = []
                continue
            top_score = max(score for _, score in scored)
            best[(style, metric)] = [
                condition for condition, score in scored if score == top_score
            ]
    return best
