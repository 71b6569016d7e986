"""Wire-protocol HTTP layer: POST /generate and GET /health.

Every non-200 response carries {"error": text}; 200 responses carry
{"continuation": text, "backend_id": text} and nothing else clients
must depend on.
"""

from __future__ import annotations

import os
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .runner import ContextOverflowError, ModelRunner

DEFAULT_MODELS = {"sep": "t5-base", "plain": "gpt2"}
ENV_VARS = {"sep": "MODEL_SEP", "plain": "MODEL_PLAIN"}


class SampledParams(BaseModel):
    seed: int


class SampledDecode(BaseModel):
    sampled: SampledParams


class GenerateRequest(BaseModel):
    style: Literal["sep", "plain"]
    prompt: str = Field(min_length=1)
    max_new_tokens: int = Field(default=128, ge=1)
    decode: Literal["greedy"] | SampledDecode = "greedy"


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def resolve_bindings(overrides: dict[str, str] | None = None) -> dict[str, str]:
    """style -> model id; empty string unbinds a style."""
    bindings = {}
    for style, default in DEFAULT_MODELS.items():
        model_id = os.environ.get(ENV_VARS[style], default)
        if overrides and style in overrides:
            model_id = overrides[style]
        if model_id:
            bindings[style] = model_id
    return bindings


def create_app(bindings: dict[str, str] | None = None) -> FastAPI:
    app = FastAPI(title="lm-service")
    runners = {
        style: ModelRunner(style, model_id)
        for style, model_id in resolve_bindings(bindings).items()
    }
    app.state.runners = runners

    @app.exception_handler(RequestValidationError)
    async def invalid_request(
        request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        parts = [
            f"{'.'.join(str(piece) for piece in err['loc'])}: {err['msg']}"
            for err in exc.errors()
        ]
        return _error(400, "invalid request: " + "; ".join(parts))

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "models": {s: r.model_id for s, r in runners.items()},
        }

    @app.post("/generate")
    def generate(body: GenerateRequest) -> JSONResponse:
        runner = runners.get(body.style)
        if runner is None:
            return _error(400, f"no model bound for style '{body.style}'")
        seed = (
            body.decode.sampled.seed
            if isinstance(body.decode, SampledDecode)
            else None
        )
        try:
            text = runner.generate(body.prompt, body.max_new_tokens, seed=seed)
        except ContextOverflowError as exc:
            return _error(413, str(exc))
        except Exception as exc:  # noqa: BLE001 - anything else is a 500
            return _error(500, f"generation failed: {exc}")
        return JSONResponse(
            status_code=200,
            content={"continuation": text, "backend_id": runner.model_id},
        )

    return app
