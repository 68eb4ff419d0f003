"""Passage retrieval and unsupervised re-ranking toolkit."""

__version__ = "0.1.0"

from .corpus import Corpus, Passage, export_corpus, ingest_passages, split_document
from .errors import (
    DataFormatError,
    InvalidScorePairError,
    NotFoundError,
    ScorerTransportError,
    UprkitError,
)
from .evaluation import (
    AccuracyReport,
    MetricResult,
    ProfileRow,
    Qrels,
    has_answer,
    latency_profile,
    load_qrels,
    ndcg_at_k,
    normalize_answer,
    recall_at_k,
    top_k_accuracy,
)
from .queries import Query, load_queries, save_queries
from .reranker import (
    DEFAULT_TEMPLATE,
    PASSAGE_GIVEN_QUESTION,
    QUESTION_GIVEN_PASSAGE,
    PromptTemplate,
    RerankConfig,
    RerankedCandidate,
    build_prompt,
    relevance_score,
    rerank,
    rerank_run,
)
from .retriever import (
    Bm25Index,
    Bm25Params,
    RetrievalRun,
    RunCandidate,
    analyze,
    bm25_score,
    build_index,
    fuse_union,
    load_run,
    retrieve,
    save_run,
)
from .scorer import MockScorer, RemoteScorer, ScorePair, ScoreResult, Scorer, mock_score

__all__ = [name for name in dir() if not name.startswith("_")]
