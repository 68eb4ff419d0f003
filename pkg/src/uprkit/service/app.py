"""FastAPI application exposing the retrieval and re-ranking pipeline.

Every endpoint is stateless: passages, queries, and runs arrive inline in
the request body, which keeps the service safe for any number of
concurrent clients (all core data structures are immutable once built).
Run it standalone with ``uvicorn uprkit.service.app:app``; the CLI talks
to the same application in-process by default.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..corpus import Corpus, Passage
from ..errors import (
    DataFormatError,
    InvalidScorePairError,
    NotFoundError,
    ScorerTransportError,
)
from ..evaluation import latency_profile, ndcg_at_k, recall_at_k, top_k_accuracy
from ..queries import Query
from ..reranker import PromptTemplate, RerankConfig, rerank_run
from ..retriever import (
    Bm25Index,
    Bm25Params,
    RetrievalRun,
    RunCandidate,
    build_index,
    fuse_union,
    retrieve,
)
from ..scorer import MockScorer, RemoteScorer, Scorer
from . import models


def _to_corpus(passages: list[models.PassageModel]) -> Corpus:
    return Corpus(Passage(id=p.id, title=p.title, text=p.text) for p in passages)


def _to_queries(queries: list[models.QueryModel]) -> list[Query]:
    return [Query(id=q.id, text=q.question, answers=tuple(q.answers)) for q in queries]


def _to_run(run: models.RunModel) -> RetrievalRun:
    return RetrievalRun(
        entries={
            qid: [RunCandidate(c.docid, c.score, c.rank) for c in candidates]
            for qid, candidates in run.entries.items()
        },
        tag=run.tag,
    )


def _from_run(run: RetrievalRun) -> models.RunModel:
    return models.RunModel(
        entries={
            qid: [models.CandidateModel(docid=c.docid, score=c.score, rank=c.rank) for c in candidates]
            for qid, candidates in run.entries.items()
        },
        tag=run.tag,
    )


def _to_index(index: models.IndexModel) -> Bm25Index:
    return Bm25Index(
        postings=index.postings,
        doc_lengths=index.doc_lengths,
        avg_doc_length=index.avg_doc_length,
        doc_count=index.doc_count,
        params=Bm25Params(k1=index.k1, b=index.b),
        idf_variant=index.idf_variant,
    )


def _make_scorer(spec: models.ScorerSpec) -> Scorer:
    if spec.kind == "mock":
        return MockScorer(delay_per_batch=spec.delay_per_batch)
    if not spec.endpoint:
        raise ValueError("remote scorer requires an endpoint")
    return RemoteScorer(spec.endpoint, timeout=spec.timeout, max_attempts=spec.max_attempts)


def _make_config(options: models.RerankOptions) -> RerankConfig:
    template = (
        PromptTemplate(pattern=options.template.pattern, instruction=options.template.instruction)
        if options.template
        else PromptTemplate()
    )
    return RerankConfig(
        direction=options.direction,
        template=template,
        batch_size=options.batch_size,
        max_parallel_batches=options.max_parallel_batches,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="uprkit pipeline service", version=__version__)

    @app.exception_handler(DataFormatError)
    @app.exception_handler(NotFoundError)
    @app.exception_handler(InvalidScorePairError)
    @app.exception_handler(ValueError)
    async def data_error(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": "data", "detail": str(exc)})

    @app.exception_handler(ScorerTransportError)
    async def transport_error(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=502, content={"error": "scorer_transport", "detail": str(exc)}
        )

    @app.get("/v1/health", response_model=models.HealthResponse)
    def health() -> models.HealthResponse:
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/v1/index", response_model=models.IndexModel)
    def index(request: models.IndexRequest) -> models.IndexModel:
        built = build_index(
            _to_corpus(request.passages),
            Bm25Params(k1=request.k1, b=request.b),
            request.idf_variant,
        )
        return models.IndexModel(
            postings=built.postings,
            doc_lengths=built.doc_lengths,
            avg_doc_length=built.avg_doc_length,
            doc_count=built.doc_count,
            k1=built.params.k1,
            b=built.params.b,
            idf_variant=built.idf_variant,
        )

    @app.post("/v1/retrieve", response_model=models.RunResponse)
    def retrieve_queries(request: models.RetrieveRequest) -> models.RunResponse:
        if (request.passages is None) == (request.index is None):
            raise ValueError("provide exactly one of 'passages' or 'index'")
        if request.index is not None:
            built = _to_index(request.index)
        else:
            built = build_index(
                _to_corpus(request.passages),
                Bm25Params(k1=request.k1, b=request.b),
                request.idf_variant,
            )
        entries = {
            query.id: retrieve(built, query, request.depth)
            for query in _to_queries(request.queries)
        }
        return models.RunResponse(run=_from_run(RetrievalRun(entries=entries, tag=request.tag)))

    @app.post("/v1/fuse", response_model=models.RunResponse)
    def fuse(request: models.FuseRequest) -> models.RunResponse:
        fused = fuse_union([_to_run(r) for r in request.runs], request.depth)
        return models.RunResponse(run=_from_run(fused))

    @app.post("/v1/rerank", response_model=models.RunResponse)
    def rerank_endpoint(request: models.RerankRequest) -> models.RunResponse:
        reranked = rerank_run(
            _make_scorer(request.scorer),
            _to_queries(request.queries),
            _to_run(request.run),
            _to_corpus(request.passages),
            _make_config(request.options),
            depth=request.depth,
        )
        return models.RunResponse(run=_from_run(reranked))

    @app.post("/v1/evaluate/accuracy", response_model=models.AccuracyResponse)
    def evaluate_accuracy(request: models.AccuracyRequest) -> models.AccuracyResponse:
        report = top_k_accuracy(
            _to_run(request.run),
            _to_queries(request.queries),
            _to_corpus(request.passages),
            request.ks,
        )
        return models.AccuracyResponse(
            fractions=report.fractions,
            query_count=report.query_count,
            missing_answer_count=report.missing_answer_count,
        )

    @app.post("/v1/evaluate/rank-metrics", response_model=models.RankMetricsResponse)
    def evaluate_rank_metrics(request: models.RankMetricsRequest) -> models.RankMetricsResponse:
        run = _to_run(request.run)
        ndcg = ndcg_at_k(run, request.qrels, request.ndcg_k, gain=request.ndcg_gain)
        recall = recall_at_k(run, request.qrels, request.recall_k)
        return models.RankMetricsResponse(
            ndcg=models.MetricModel(**ndcg.__dict__),
            recall=models.MetricModel(**recall.__dict__),
        )

    @app.post("/v1/profile", response_model=models.ProfileResponse)
    def profile(request: models.ProfileRequest) -> models.ProfileResponse:
        scorer = _make_scorer(request.scorer)
        rows = latency_profile(
            scorer,
            _to_queries(request.queries),
            _to_run(request.run),
            _to_corpus(request.passages),
            request.depths,
            _make_config(request.options),
            accuracy_k=request.accuracy_k,
        )
        return models.ProfileResponse(
            rows=[models.ProfileRowModel(**row.__dict__) for row in rows],
            accuracy_k=request.accuracy_k,
            scorer_identity=scorer.identity,
            parallelism=request.options.max_parallel_batches,
        )

    return app


app = create_app()
