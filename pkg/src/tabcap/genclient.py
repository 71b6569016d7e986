"""Clients for the text-generation wire protocol, plus a deterministic stub.

The protocol: POST {endpoint}/generate with
``{"style": "sep"|"plain", "prompt": str, "max_new_tokens": int,
"decode": "greedy" | {"sampled": {"seed": int}}}`` and a 200 response of
``{"continuation": str, "backend_id": str}``. Error statuses carry
``{"error": str}``. The continuation never echoes the prompt.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .prompts import Style

ENDPOINT_ENV = "GENERATION_ENDPOINT"
DEFAULT_MAX_NEW_TOKENS = 128
DEFAULT_TIMEOUT_MS = 30000
STUB_PREFIX_TOKENS = 20


class GenerationError(Exception):
    """Base class for per-request generation failures."""


class GenerationTimeoutError(GenerationError):
    """Request timed out or the backend could not be reached."""


class GenerationBackendError(GenerationError):
    """Backend answered with an error status."""

    def __init__(self, status: int, detail: str):
        super().__init__(f"backend returned {status}: {detail}")
        self.status = status
        self.detail = detail


class GenerationProtocolError(GenerationError):
    """Backend answered 200 with a malformed body."""


@dataclass
class GenRequest:
    style: Style
    prompt: str
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    decode: str = "greedy"
    seed: int | None = None

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be at least 1")
        if self.decode not in ("greedy", "sampled"):
            raise ValueError(f"unknown decode mode: {self.decode}")
        if self.decode == "sampled" and self.seed is None:
            raise ValueError("sampled decoding needs a seed")

    def to_wire(self) -> dict:
        decode = (
            "greedy" if self.decode == "greedy" else {"sampled": {"seed": self.seed}}
        )
        return {
            "style": self.style.value,
            "prompt": self.prompt,
            "max_new_tokens": self.max_new_tokens,
            "decode": decode,
        }


@dataclass
class GenResponse:
    continuation: str
    backend_id: str
    latency_ms: float


class StubBackend:
    """Offline backend: echoes the first 20 prompt tokens reversed.

    Tracks in-flight request counts so tests can observe that batch
    parallelism stays bounded.
    """

    backend_id = "stub"

    def __init__(self, delay_s: float = 0.0):
        self.delay_s = delay_s
        self._lock = threading.Lock()
        self._in_flight = 0
        self.max_in_flight = 0
        self.calls = 0

    def generate(self, request: GenRequest) -> GenResponse:
        started = time.perf_counter()
        with self._lock:
            self._in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self._in_flight)
            self.calls += 1
        try:
            if self.delay_s:
                time.sleep(self.delay_s)
            words = request.prompt.split()[:STUB_PREFIX_TOKENS]
            continuation = " ".join(reversed(words))
        finally:
            with self._lock:
                self._in_flight -= 1
        return GenResponse(
            continuation=continuation,
            backend_id=self.backend_id,
            latency_ms=(time.perf_counter() - started) * 1000,
        )

    def close(self) -> None:
        pass


class HttpBackend:
    """HTTP client for the wire protocol with retries and backoff."""

    def __init__(
        self,
        endpoint: str,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        retries: int = 2,
        backoff_s: float = 0.25,
        transport: httpx.BaseTransport | None = None,
    ):
        if not endpoint:
            raise ValueError("endpoint must be non-empty")
        self.endpoint = endpoint.rstrip("/")
        self.retries = retries
        self.backoff_s = backoff_s
        self.backend_id = self.endpoint
        self._client = httpx.Client(
            base_url=self.endpoint,
            timeout=timeout_ms / 1000,
            transport=transport,
        )

    def generate(self, request: GenRequest) -> GenResponse:
        started = time.perf_counter()
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                response = self._client.post("/generate", json=request.to_wire())
            except (httpx.TimeoutException, httpx.ConnectError) as exc:
                last_exc = exc
                continue
            return self._parse(response, started)
        raise GenerationTimeoutError(
            f"backend unreachable after {self.retries + 1} attempts: {last_exc}"
        )

    def _parse(self, response: httpx.Response, started: float) -> GenResponse:
        if response.status_code != 200:
            try:
                detail = response.json().get("error", response.text[:200])
            except (json.JSONDecodeError, ValueError):
                detail = response.text[:200]
            raise GenerationBackendError(response.status_code, detail)
        try:
            body = response.json()
        except (json.JSONDecodeError, ValueError) as exc:
            raise GenerationProtocolError(f"response is not JSON: {exc}") from exc
        continuation = body.get("continuation") if isinstance(body, dict) else None
        backend_id = body.get("backend_id") if isinstance(body, dict) else None
        if not isinstance(continuation, str) or not isinstance(backend_id, str):
            raise GenerationProtocolError(
                "response must carry string 'continuation' and 'backend_id'"
            )
        return GenResponse(
            continuation=continuation,
            backend_id=backend_id,
            latency_ms=(time.perf_counter() - started) * 1000,
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "HttpBackend":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def make_backend(
    kind: str,
    endpoint: str | None = None,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
    retries: int = 2,
    transport: httpx.BaseTransport | None = None,
):
    """Build a backend from CLI-ish arguments; env fills a missing URL."""
    if kind == "stub":
        return StubBackend()
    if kind == "http":
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV, "")
        if not endpoint:
            raise ValueError(
                f"http backend needs an endpoint (flag or ${ENDPOINT_ENV})"
            )
        return HttpBackend(endpoint, timeout_ms=timeout_ms, retries=retries,
                           transport=transport)
    raise ValueError(f"unknown backend kind: {kind}")


def generate_batch(
    backend, requests, parallelism: int = 4
) -> list[GenResponse | GenerationError]:
    """Run requests with at most `parallelism` in flight.

    The result list aligns index-for-index with the input; a failed
    request surfaces as its GenerationError without aborting the rest.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    requests = list(requests)
    results: list[GenResponse | GenerationError] = [None] * len(requests)  # type: ignore[list-item]
    if not requests:
        return results
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = {
            pool.submit(backend.generate, req): i for i, req in enumerate(requests)
        }
        for future, i in futures.items():
            try:
                results[i] = future.result()
            except GenerationError as exc:
                results[i] = exc
            except Exception as exc:  # keep the batch alive on surprises
                results[i] = GenerationError(str(exc))
    return results
