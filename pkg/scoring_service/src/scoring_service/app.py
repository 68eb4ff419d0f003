"""FastAPI app exposing the scoring wire protocol.

``POST /v1/score`` accepts fully rendered (context, continuation) pairs —
prompt construction belongs to the client — and returns positionally
aligned results. Requests are micro-batched onto the model under a lock,
so concurrent clients are safe and identical requests produce identical
numbers. Until a backend is loaded, both endpoints answer 503.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .backend import PairTokenizationError, _BaseBackend, load_backend
from .models import HealthResponse, ResultModel, ScoreRequest, ScoreResponse

logger = logging.getLogger("scoring_service")

DEFAULT_MICRO_BATCH_SIZE = 16


def create_app(
    backend: _BaseBackend | None = None,
    model_dir: str | None = None,
    micro_batch_size: int = DEFAULT_MICRO_BATCH_SIZE,
) -> FastAPI:
    if backend is None and model_dir is not None:
        backend = load_backend(model_dir)
    if backend is not None:
        logger.info(
            "serving %s (%s), max_context_tokens=%d, micro_batch_size=%d",
            backend.info.model,
            backend.info.architecture,
            backend.info.max_context_tokens,
            micro_batch_size,
        )

    app = FastAPI(title="scoring service")
    app.state.backend = backend
    app.state.micro_batch_size = micro_batch_size

    @app.exception_handler(PairTokenizationError)
    async def pair_error(request: Request, exc: PairTokenizationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    def _require_backend() -> _BaseBackend | JSONResponse:
        if app.state.backend is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        return app.state.backend

    @app.get("/v1/health", response_model=HealthResponse)
    def health():
        ready = _require_backend()
        if isinstance(ready, JSONResponse):
            return ready
        return HealthResponse(
            model=ready.info.model, max_context_tokens=ready.info.max_context_tokens
        )

    @app.post("/v1/score", response_model=ScoreResponse)
    def score(request: ScoreRequest):
        ready = _require_backend()
        if isinstance(ready, JSONResponse):
            return ready
        pairs = [(p.context, p.continuation) for p in request.pairs]
        size = app.state.micro_batch_size
        results = []
        with ready.lock:
            for start in range(0, len(pairs), size):
                chunk = pairs[start : start + size]
                try:
                    scored = ready.score_pairs(chunk)
                except PairTokenizationError as exc:
                    raise _offset_pair_error(exc, start) from None
                results.extend(scored)
        return ScoreResponse(
            results=[
                ResultModel(
                    sum_logprob=r.sum_logprob,
                    num_tokens=r.num_tokens,
                    mean_logprob=r.mean_logprob,
                    truncated=r.truncated,
                )
                for r in results
            ]
        )

    return app


def _offset_pair_error(exc: PairTokenizationError, offset: int) -> PairTokenizationError:
    # Backends report positions within their chunk; surface request positions.
    text = str(exc)
    if text.startswith("pair ") and offset:
        head, _, rest = text.partition(":")
        try:
            absolute = int(head.split()[1]) + offset
            return PairTokenizationError(f"pair {absolute}:{rest}")
        except (IndexError, ValueError):
            return exc
    return exc
