"""Wire models for the scoring protocol."""

from __future__ import annotations

from pydantic import BaseModel, Field


class PairModel(BaseModel):
    context: str
    continuation: str


class ScoreRequest(BaseModel):
    pairs: list[PairModel] = Field(min_length=1)


class ResultModel(BaseModel):
    sum_logprob: float
    num_tokens: int
    mean_logprob: float
    truncated: bool


class ScoreResponse(BaseModel):
    results: list[ResultModel]


class HealthResponse(BaseModel):
    model: str
    max_context_tokens: int
