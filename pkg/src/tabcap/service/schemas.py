"""Request/response models for the pipeline service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class PageRecordModel(BaseModel):
    page_id: str
    sentences: list[str]
    caption: list[str]
    table: list[list[str]]


class PageLinesModel(BaseModel):
    page_id: str
    lines: list[str]


class RejectedPageModel(BaseModel):
    page_id: str
    reason: str


class DatasetBuildRequest(BaseModel):
    pages: list[PageLinesModel]
    band_overlap: float = 0.5
    table_gap: float = 30.0
    min_caption_sentences: int = 0


class DatasetBuildResponse(BaseModel):
    records: list[PageRecordModel]
    rejected: list[RejectedPageModel]


class RetrieveRequest(BaseModel):
    records: list[PageRecordModel]
    method: str = "top1"
    k1: float = 1.2
    b: float = 0.75


class RetrievedForRecordModel(BaseModel):
    page_id: str
    sentences: list[str]


class RetrieveResponse(BaseModel):
    results: list[RetrievedForRecordModel]


class AssembleRequest(BaseModel):
    records: list[PageRecordModel]
    variant: str = "rw"
    method: str = "none"
    style: str = "sep"
    k1: float = 1.2
    b: float = 0.75
    max_length: int = 0
    drop_numerals: bool = True


class PromptItemModel(BaseModel):
    record_id: str
    prompt: str
    target: str


class AssembleResponse(BaseModel):
    items: list[PromptItemModel]


class PairModel(BaseModel):
    candidate: str
    reference: str


class EvaluateRequest(BaseModel):
    pairs: list[PairModel]
    rouge_mode: str = "recall"


class EvaluateResponse(BaseModel):
    aggregates: dict[str, float]
    per_pair: list[dict[str, float]]
    metadata: dict


class GridRunRequest(BaseModel):
    records: list[PageRecordModel]
    backend: str = "stub"
    endpoint: str | None = None
    styles: list[str] = Field(default_factory=lambda: ["sep", "plain"])
    conditions: list[str] | None = None
    parallelism: int = 4
    timeout_ms: int = 30000
    retries: int = 2
    max_new_tokens: int = 128


class GenerationRowModel(BaseModel):
    record_id: str
    prompt: str
    continuation: str
    reference: str


class GridRunResponse(BaseModel):
    matrix: dict
    csv: str
    # keyed "style/condition", e.g. "sep/top1:rh"
    generations: dict[str, list[GenerationRowModel]]


class HealthResponse(BaseModel):
    status: str
    version: str
