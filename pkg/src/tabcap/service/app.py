"""HTTP facade over the pipeline: build, retrieve, assemble, evaluate, grid."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..genclient import make_backend
from ..harness import (
    CANONICAL_CONDITIONS,
    BackendUnreachableError,
    Condition,
    GridConfig,
    emit_table,
    run_grid,
)
from ..layout import (
    AnnotationError,
    PageRecord,
    RecordRejectedError,
    apply_filter,
    build_record,
    parse_page,
)
from ..metrics import MetricUndefinedError, evaluate_corpus
from ..prompts import Style, build_prompt
from ..retrieval import Bm25Params, RetrievalConfig, retrieve_for_record
from ..tables import Variant
from . import schemas


def _to_record(model: schemas.PageRecordModel) -> PageRecord:
    return PageRecord(
        page_id=model.page_id,
        sentences=list(model.sentences),
        caption=list(model.caption),
        table=[list(row) for row in model.table],
    )


def create_app() -> FastAPI:
    app = FastAPI(title="tabcap", version=__version__)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/dataset/build", response_model=schemas.DatasetBuildResponse)
    def dataset_build(
        body: schemas.DatasetBuildRequest,
    ) -> schemas.DatasetBuildResponse:
        records: list[schemas.PageRecordModel] = []
        rejected: list[schemas.RejectedPageModel] = []
        for page in body.pages:
            try:
                layout = parse_page(page.lines, page_id=page.page_id)
            except AnnotationError as exc:
                rejected.append(
                    schemas.RejectedPageModel(
                        page_id=page.page_id, reason=f"parse error: {exc}"
                    )
                )
                continue
            if not apply_filter(
                layout, band_overlap=body.band_overlap, table_gap=body.table_gap
            ):
                try:
                    build_record(
                        layout,
                        band_overlap=body.band_overlap,
                        table_gap=body.table_gap,
                    )
                    reason = "filter failed"
                except RecordRejectedError as exc:
                    reason = exc.criterion
                rejected.append(
                    schemas.RejectedPageModel(page_id=page.page_id, reason=reason)
                )
                continue
            record = build_record(
                layout, band_overlap=body.band_overlap, table_gap=body.table_gap
            )
            if (
                body.min_caption_sentences
                and len(record.caption) < body.min_caption_sentences
            ):
                rejected.append(
                    schemas.RejectedPageModel(
                        page_id=page.page_id,
                        reason=(
                            f"caption shorter than {body.min_caption_sentences}"
                            " sentences"
                        ),
                    )
                )
                continue
            records.append(schemas.PageRecordModel(**record.to_dict()))
        return schemas.DatasetBuildResponse(records=records, rejected=rejected)

    @app.post("/retrieve", response_model=schemas.RetrieveResponse)
    def retrieve(body: schemas.RetrieveRequest) -> schemas.RetrieveResponse:
        try:
            config = RetrievalConfig.from_string(
                body.method, Bm25Params(k1=body.k1, b=body.b)
            )
            results = [
                schemas.RetrievedForRecordModel(
                    page_id=model.page_id,
                    sentences=retrieve_for_record(_to_record(model), config),
                )
                for model in body.records
            ]
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.RetrieveResponse(results=results)

    @app.post("/assemble", response_model=schemas.AssembleResponse)
    def assemble_prompts(body: schemas.AssembleRequest) -> schemas.AssembleResponse:
        try:
            variant = Variant(body.variant)
            style = Style(body.style)
            retrieval = RetrievalConfig.from_string(
                body.method, Bm25Params(k1=body.k1, b=body.b)
            )
            items = []
            for model in body.records:
                built = build_prompt(
                    _to_record(model),
                    variant,
                    style,
                    retrieval,
                    max_length=body.max_length,
                    drop_numerals=body.drop_numerals,
                )
                items.append(
                    schemas.PromptItemModel(
                        record_id=built.record_id,
                        prompt=built.prompt,
                        target=built.target,
                    )
                )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.AssembleResponse(items=items)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(body: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        try:
            report = evaluate_corpus(
                [(p.candidate, p.reference) for p in body.pairs],
                rouge_mode=body.rouge_mode,
            )
        except (MetricUndefinedError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.EvaluateResponse(
            aggregates=report.aggregates,
            per_pair=report.per_pair,
            metadata=report.metadata,
        )

    @app.post("/grid/run", response_model=schemas.GridRunResponse)
    def grid_run(body: schemas.GridRunRequest) -> schemas.GridRunResponse:
        try:
            conditions = (
                tuple(Condition.from_label(c) for c in body.conditions)
                if body.conditions
                else CANONICAL_CONDITIONS
            )
            config = GridConfig(
                styles=tuple(Style(s) for s in body.styles),
                conditions=conditions,
                parallelism=body.parallelism,
                max_new_tokens=body.max_new_tokens,
            )
            backend = make_backend(
                body.backend,
                endpoint=body.endpoint,
                timeout_ms=body.timeout_ms,
                retries=body.retries,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            result = run_grid(
                [_to_record(m) for m in body.records], backend, config
            )
        except BackendUnreachableError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        finally:
            backend.close()
        generations = {
            f"{style}/{condition}": [
                schemas.GenerationRowModel(**row) for row in rows
            ]
            for (style, condition), rows in result.generations.items()
        }
        return schemas.GridRunResponse(
            matrix=result.matrix.to_dict(),
            csv=emit_table(result.matrix, "csv"),
            generations=generations,
        )

    return app


app = create_app()
