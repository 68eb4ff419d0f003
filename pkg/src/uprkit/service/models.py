"""Pydantic request/response models for the pipeline service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

DEFAULT_EVAL_KS = [1, 5, 20, 100]


class PassageModel(BaseModel):
    id: str
    text: str
    title: str = ""


class QueryModel(BaseModel):
    id: str
    question: str
    answers: list[str] = []


class CandidateModel(BaseModel):
    docid: str
    score: float
    rank: int


class RunModel(BaseModel):
    entries: dict[str, list[CandidateModel]]
    tag: str = "run"


class IndexModel(BaseModel):
    postings: dict[str, dict[str, int]]
    doc_lengths: dict[str, int]
    avg_doc_length: float
    doc_count: int
    k1: float = 0.9
    b: float = 0.4
    idf_variant: str = "lucene"


class ScorerSpec(BaseModel):
    kind: Literal["mock", "remote"] = "mock"
    endpoint: str | None = None
    delay_per_batch: float = 0.0
    timeout: float = 60.0
    max_attempts: int = Field(3, ge=1)


class TemplateModel(BaseModel):
    pattern: str
    instruction: str


class RerankOptions(BaseModel):
    direction: Literal["question_given_passage", "passage_given_question"] = (
        "question_given_passage"
    )
    template: TemplateModel | None = None
    batch_size: int = Field(32, ge=1)
    max_parallel_batches: int = Field(1, ge=1)


class IndexRequest(BaseModel):
    passages: list[PassageModel]
    k1: float = 0.9
    b: float = 0.4
    idf_variant: str = "lucene"


class RetrieveRequest(BaseModel):
    queries: list[QueryModel]
    depth: int = Field(1000, ge=1)
    tag: str = "bm25"
    passages: list[PassageModel] | None = None
    index: IndexModel | None = None
    k1: float = 0.9
    b: float = 0.4
    idf_variant: str = "lucene"


class FuseRequest(BaseModel):
    runs: list[RunModel]
    depth: int = Field(1000, ge=1)


class RerankRequest(BaseModel):
    passages: list[PassageModel]
    queries: list[QueryModel]
    run: RunModel
    depth: int = Field(1000, ge=1)
    scorer: ScorerSpec = ScorerSpec()
    options: RerankOptions = RerankOptions()


class RunResponse(BaseModel):
    run: RunModel


class AccuracyRequest(BaseModel):
    run: RunModel
    queries: list[QueryModel]
    passages: list[PassageModel]
    ks: list[int] = DEFAULT_EVAL_KS


class AccuracyResponse(BaseModel):
    fractions: dict[int, float]
    query_count: int
    missing_answer_count: int


class MetricModel(BaseModel):
    value: float
    evaluated: int
    skipped_missing: int
    skipped_unjudged: int


class RankMetricsRequest(BaseModel):
    run: RunModel
    qrels: dict[str, dict[str, int]]
    ndcg_k: int = Field(10, ge=1)
    recall_k: int = Field(100, ge=1)
    ndcg_gain: Literal["exponential", "linear"] = "exponential"


class RankMetricsResponse(BaseModel):
    ndcg: MetricModel
    recall: MetricModel


class ProfileRequest(BaseModel):
    passages: list[PassageModel]
    queries: list[QueryModel]
    run: RunModel
    depths: list[int]
    scorer: ScorerSpec = ScorerSpec()
    options: RerankOptions = RerankOptions()
    accuracy_k: int = Field(20, ge=1)


class ProfileRowModel(BaseModel):
    depth: int
    accuracy: float
    seconds_per_query: float


class ProfileResponse(BaseModel):
    rows: list[ProfileRowModel]
    accuracy_k: int
    scorer_identity: str
    parallelism: int


class HealthResponse(BaseModel):
    status: str
    version: str
