"""Measurement surfaces: answer-span accuracy, graded rank metrics, latency.

Answer matching normalizes both sides the same way (lowercase, Unicode
NFKC, punctuation stripped, standalone articles dropped, whitespace
collapsed) and then asks whether some answer's token sequence occurs
contiguously in the passage's token sequence.

Qrels file format: whitespace-separated ``qid 0 docid grade`` lines.
Report files are TSV with a ``#`` comment header recording the effective
configuration.
"""

from __future__ import annotations

import math
import time
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, Passage
from .errors import DataFormatError, NotFoundError
from .queries import Query, queries_by_id
from .reranker import RerankConfig, rerank_run
from .retriever import RetrievalRun
from .scorer import Scorer

Qrels = dict[str, dict[str, int]]


def load_qrels(path: str | Path) -> Qrels:
    path = Path(path)
    qrels: Qrels = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 4 whitespace-separated fields, got {len(parts)}"
                )
            qid, _, docid, grade_s = parts
            try:
                grade = int(grade_s)
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: grade {grade_s!r} is not an integer") from None
            if grade < 0:
                raise DataFormatError(f"{path}:{lineno}: grade must be >= 0, got {grade}")
            if docid in qrels.get(qid, {}):
                raise DataFormatError(f"{path}:{lineno}: duplicate judgment for ({qid!r}, {docid!r})")
            qrels.setdefault(qid, {})[docid] = grade
    return qrels


_ARTICLES = frozenset({"a", "an", "the"})


def normalize_answer(text: str) -> str:
    """Lowercase, strip punctuation and articles, collapse whitespace."""
    text = unicodedata.normalize("NFKC", text).lower()
    text = "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))
    words = [w for w in text.split() if w not in _ARTICLES]
    return " ".join(words)


def has_answer(passage: Passage, answers: Sequence[str]) -> bool:
    """True iff some normalized answer occurs contiguously in the passage."""
    passage_tokens = normalize_answer(passage.text).split()
    for answer in answers:
        answer_tokens = normalize_answer(answer).split()
        if answer_tokens and _contains_sublist(passage_tokens, answer_tokens):
            return True
    return False


def _contains_sublist(haystack: list[str], needle: list[str]) -> bool:
    n = len(needle)
    for start in range(len(haystack) - n + 1):
        if haystack[start : start + n] == needle:
            return True
    return False


@dataclass
class AccuracyReport:
    """Top-K retrieval accuracy at each requested cutoff."""

    fractions: dict[int, float]
    query_count: int
    missing_answer_count: int = 0


def top_k_accuracy(
    run: RetrievalRun,
    queries: Iterable[Query] | Mapping[str, Query],
    corpus: Corpus,
    ks: Sequence[int],
) -> AccuracyReport:
    """Fraction of queries whose top-K candidates contain an answer span.

    Queries with no gold answers count as misses and are tallied in
    ``missing_answer_count``.
    """
    if not run.entries:
        raise ValueError("empty evaluation: run has no queries")
    if not ks or any(k < 1 for k in ks):
        raise ValueError(f"ks must be nonempty positive cutoffs, got {list(ks)}")
    by_id = queries_by_id(queries)
    k_max = max(ks)
    hit_ranks: list[int | None] = []
    missing_answers = 0
    for qid, candidates in run.entries.items():
        if qid not in by_id:
            raise NotFoundError(f"run query {qid!r} has no query record")
        query = by_id[qid]
        if not query.answers:
            missing_answers += 1
            hit_ranks.append(None)
            continue
        hit: int | None = None
        for cand in candidates[:k_max]:
            if cand.docid not in corpus:
                raise NotFoundError(f"query {qid!r}: candidate passage {cand.docid!r} is not in the corpus")
            if has_answer(corpus.lookup(cand.docid), query.answers):
                hit = cand.rank
                break
        hit_ranks.append(hit)
    count = len(hit_ranks)
    fractions = {
        k: sum(1 for r in hit_ranks if r is not None and r <= k) / count for k in ks
    }
    return AccuracyReport(fractions=fractions, query_count=count, missing_answer_count=missing_answers)


@dataclass
class MetricResult:
    """Macro-averaged metric value plus the query bookkeeping behind it."""

    value: float
    evaluated: int
    skipped_missing: int = 0  # queries absent from the qrels
    skipped_unjudged: int = 0  # queries whose judgments are all grade 0


GAIN_FUNCTIONS = {
    "exponential": lambda grade: 2.0**grade - 1.0,
    "linear": float,
}


def ndcg_at_k(run: RetrievalRun, qrels: Qrels, k: int = 10, gain: str = "exponential") -> MetricResult:
    """Macro-averaged nDCG@k, by default with exponential gain 2^grade - 1.

    Unjudged documents count as grade 0; queries missing from the qrels or
    carrying no positive grade are skipped and tallied, not zeroed.
    """
    if gain not in GAIN_FUNCTIONS:
        raise ValueError(f"gain must be one of {sorted(GAIN_FUNCTIONS)}, got {gain!r}")
    gain_of = GAIN_FUNCTIONS[gain]

    per_query: list[float] = []
    skipped_missing = 0
    skipped_unjudged = 0
    for qid, candidates in run.entries.items():
        if qid not in qrels:
            skipped_missing += 1
            continue
        grades = qrels[qid]
        positive = sorted((g for g in grades.values() if g > 0), reverse=True)
        if not positive:
            skipped_unjudged += 1
            continue
        dcg = sum(
            gain_of(grades.get(cand.docid, 0)) / math.log2(i + 1)
            for i, cand in enumerate(candidates[:k], start=1)
        )
        ideal = sum(gain_of(g) / math.log2(i + 1) for i, g in enumerate(positive[:k], start=1))
        per_query.append(dcg / ideal)
    if not per_query:
        raise ValueError("empty evaluation: no query had usable judgments")
    return MetricResult(
        value=sum(per_query) / len(per_query),
        evaluated=len(per_query),
        skipped_missing=skipped_missing,
        skipped_unjudged=skipped_unjudged,
    )


def recall_at_k(run: RetrievalRun, qrels: Qrels, k: int = 100) -> MetricResult:
    """Macro-averaged fraction of judged-relevant docs inside the top k."""
    per_query: list[float] = []
    skipped_missing = 0
    skipped_unjudged = 0
    for qid, candidates in run.entries.items():
        if qid not in qrels:
            skipped_missing += 1
            continue
        relevant = {docid for docid, grade in qrels[qid].items() if grade > 0}
        if not relevant:
            skipped_unjudged += 1
            continue
        retrieved = {cand.docid for cand in candidates[:k]}
        per_query.append(len(relevant & retrieved) / len(relevant))
    if not per_query:
        raise ValueError("empty evaluation: no query had usable judgments")
    return MetricResult(
        value=sum(per_query) / len(per_query),
        evaluated=len(per_query),
        skipped_missing=skipped_missing,
        skipped_unjudged=skipped_unjudged,
    )


@dataclass
class ProfileRow:
    depth: int
    accuracy: float
    seconds_per_query: float


def latency_profile(
    scorer: Scorer,
    queries: Iterable[Query] | Mapping[str, Query],
    run: RetrievalRun,
    corpus: Corpus,
    depths: Sequence[int],
    config: RerankConfig = RerankConfig(),
    accuracy_k: int = 20,
) -> list[ProfileRow]:
    """Re-rank at each candidate depth, recording accuracy and wall time."""
    if not depths:
        raise ValueError("depths must be nonempty")
    if list(depths) != sorted(depths):
        raise ValueError(f"depths must be ascending, got {list(depths)}")
    by_id = queries_by_id(queries)
    rows = []
    for depth in depths:
        start = time.perf_counter()
        reranked = rerank_run(scorer, by_id, run, corpus, config, depth)
        elapsed = time.perf_counter() - start
        report = top_k_accuracy(reranked, by_id, corpus, [accuracy_k])
        rows.append(
            ProfileRow(
                depth=depth,
                accuracy=report.fractions[accuracy_k],
                seconds_per_query=elapsed / len(run.entries),
            )
        )
    return rows


def format_profile_tsv(rows: Sequence[ProfileRow], accuracy_k: int, header: Iterable[str] = ()) -> str:
    lines = [f"# {text}" for text in header]
    lines.append(f"depth\ttop{accuracy_k}_accuracy\tseconds_per_query")
    for row in rows:
        lines.append(f"{row.depth}\t{row.accuracy:.6f}\t{row.seconds_per_query:.6f}")
    return "\n".join(lines) + "\n"
