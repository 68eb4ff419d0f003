"""Token-level conditional log-likelihood providers.

A scorer answers one question: given a conditioning ``context`` string,
what is the sum and per-token mean of the natural-log likelihood of the
``continuation`` tokens? Tokenization belongs to the backend, so
``num_tokens`` is always the backend's own count.

Two implementations live here: a deterministic token-overlap mock used as
a test oracle, and an HTTP client for a remote scoring service speaking
``POST /v1/score`` / ``GET /v1/health``.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx

from .errors import InvalidScorePairError, ScorerTransportError


@dataclass(frozen=True)
class ScorePair:
    context: str
    continuation: str


@dataclass(frozen=True)
class ScoreResult:
    sum_logprob: float
    num_tokens: int
    mean_logprob: float
    truncated: bool = False


class Scorer(Protocol):
    """Anything that maps score pairs to aligned score results."""

    @property
    def identity(self) -> str: ...

    def score_batch(self, pairs: Sequence[ScorePair]) -> list[ScoreResult]: ...


_LOG_MATCH = math.log(0.9)
_LOG_MISS = math.log(0.1)


def mock_score(context: str, continuation: str) -> ScoreResult:
    """Deterministic surrogate for a language model.

    Both strings are whitespace-tokenized and lowercased; a continuation
    token scores log 0.9 when it appears among the context tokens and
    log 0.1 otherwise.

    Sum and mean are computed from the match count and match fraction, not
    by per-token accumulation: two candidates whose scores are equal as
    real numbers then compare bitwise equal, so the ordering cannot hinge
    on rounding noise (and stays stable under constant score shifts). The
    mean deviates from sum/count by at most a few ulp.
    """
    tokens = continuation.lower().split()
    if not tokens:
        raise InvalidScorePairError("continuation has no tokens")
    context_tokens = set(context.lower().split())
    matched = sum(1 for token in tokens if token in context_tokens)
    count = len(tokens)
    return ScoreResult(
        sum_logprob=matched * _LOG_MATCH + (count - matched) * _LOG_MISS,
        num_tokens=count,
        mean_logprob=_LOG_MISS + (matched / count) * (_LOG_MATCH - _LOG_MISS),
    )


class MockScorer:
    """Pure-function scorer; ``delay_per_batch`` simulates inference latency."""

    def __init__(self, delay_per_batch: float = 0.0):
        self.delay_per_batch = delay_per_batch

    @property
    def identity(self) -> str:
        return "mock"

    def score_batch(self, pairs: Sequence[ScorePair]) -> list[ScoreResult]:
        results = []
        for i, pair in enumerate(pairs):
            try:
                results.append(mock_score(pair.context, pair.continuation))
            except InvalidScorePairError as exc:
                raise InvalidScorePairError(f"pair {i}: {exc}") from None
        if self.delay_per_batch > 0:
            time.sleep(self.delay_per_batch)
        return results


class RemoteScorer:
    """Client for a remote scoring service.

    Transport failures and 5xx responses are retried with exponential
    backoff up to ``max_attempts`` before raising
    :class:`ScorerTransportError`. Concurrent ``score_batch`` calls are
    capped at ``max_inflight`` in-flight requests.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff: float = 0.5,
        max_inflight: int = 8,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._client = httpx.Client(
            base_url=self.endpoint, timeout=timeout, transport=transport
        )
        self._inflight = threading.Semaphore(max_inflight)
        self._identity: str | None = None

    @property
    def identity(self) -> str:
        if self._identity is None:
            try:
                self._identity = f"remote:{self.health()['model']}"
            except ScorerTransportError:
                self._identity = f"remote:{self.endpoint}"
        return self._identity

    def health(self) -> dict:
        try:
            response = self._client.get("/v1/health")
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise ScorerTransportError(f"health check failed for {self.endpoint}: {exc}") from exc
        return response.json()

    def score_batch(self, pairs: Sequence[ScorePair]) -> list[ScoreResult]:
        payload = {
            "pairs": [{"context": p.context, "continuation": p.continuation} for p in pairs]
        }
        with self._inflight:
            response = self._post_with_retries(payload)
        results = response.json().get("results", [])
        if len(results) != len(pairs):
            raise ScorerTransportError(
                f"scoring service returned {len(results)} results for {len(pairs)} pairs"
            )
        return [
            ScoreResult(
                sum_logprob=float(r["sum_logprob"]),
                num_tokens=int(r["num_tokens"]),
                mean_logprob=float(r["mean_logprob"]),
                truncated=bool(r.get("truncated", False)),
            )
            for r in results
        ]

    def _post_with_retries(self, payload: dict) -> httpx.Response:
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt > 0:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                response = self._client.post("/v1/score", json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code in (400, 422):
                raise InvalidScorePairError(_error_detail(response))
            if response.status_code >= 500:
                last_error = ScorerTransportError(
                    f"scoring service returned {response.status_code}: {_error_detail(response)}"
                )
                continue
            return response
        raise ScorerTransportError(
            f"scoring service at {self.endpoint} unreachable after "
            f"{self.max_attempts} attempts: {last_error}"
        )

    def close(self) -> None:
        self._client.close()


def _error_detail(response: httpx.Response) -> str:
    try:
        return str(response.json().get("detail", response.text))
    except ValueError:
        return response.text
