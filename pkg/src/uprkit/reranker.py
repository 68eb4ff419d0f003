"""Re-order retrieved candidates by conditional log-likelihood.

The relevance score of a candidate passage is the mean log-likelihood the
scorer assigns to generating the question from the passage (or, for the
ablation direction, the passage from the question). The passage prior is
assumed uniform, so ranking by this quantity alone is exact: any constant
shared by all candidates of a query cancels out of the ordering.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

from .corpus import Corpus, Passage
from .errors import DataFormatError, NotFoundError
from .queries import Query, queries_by_id
from .retriever import RetrievalRun, RunCandidate
from .scorer import Scorer, ScorePair

QUESTION_GIVEN_PASSAGE = "question_given_passage"
PASSAGE_GIVEN_QUESTION = "passage_given_question"
DIRECTIONS = (QUESTION_GIVEN_PASSAGE, PASSAGE_GIVEN_QUESTION)

# Conditioning text for the passage-generation ablation direction.
_PASSAGE_DIRECTION_PATTERN = "Question: {question}. Please write a passage for this question. Passage:"

RERANK_TAG_SUFFIX = "+upr"


@dataclass(frozen=True)
class PromptTemplate:
    """Serialization of a passage plus a generation instruction.

    ``pattern`` must contain the ``{passage}`` placeholder exactly once and
    may contain ``{title}``; when the passage title is empty, the
    ``{title}. `` segment is dropped rather than rendered blank.
    """

    pattern: str = "Passage: {title}. {passage}."
    instruction: str = "Please write a question based on this passage. Question:"

    def __post_init__(self) -> None:
        if self.pattern.count("{passage}") != 1:
            raise ValueError("template pattern must contain {passage} exactly once")


DEFAULT_TEMPLATE = PromptTemplate()


@dataclass(frozen=True)
class RerankConfig:
    direction: str = QUESTION_GIVEN_PASSAGE
    template: PromptTemplate = DEFAULT_TEMPLATE
    batch_size: int = 32
    max_parallel_batches: int = 1

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_parallel_batches < 1:
            raise ValueError(f"max_parallel_batches must be >= 1, got {self.max_parallel_batches}")


def build_prompt(passage: Passage, template: PromptTemplate = DEFAULT_TEMPLATE) -> str:
    if passage.title:
        rendered = template.pattern.replace("{title}", passage.title)
    else:
        rendered = template.pattern.replace("{title}. ", "").replace("{title}", "")
    rendered = rendered.replace("{passage}", passage.text)
    if template.instruction:
        rendered = f"{rendered} {template.instruction}"
    return rendered


def _score_pair(query: Query, passage: Passage, config: RerankConfig) -> ScorePair:
    if config.direction == QUESTION_GIVEN_PASSAGE:
        return ScorePair(context=build_prompt(passage, config.template), continuation=query.text)
    return ScorePair(
        context=_PASSAGE_DIRECTION_PATTERN.replace("{question}", query.text),
        continuation=passage.text,
    )


def relevance_score(
    scorer: Scorer, query: Query, passage: Passage, config: RerankConfig = RerankConfig()
) -> float:
    """Mean log-likelihood of the query given the passage (or the reverse)."""
    if not query.text.strip():
        raise ValueError(f"query {query.id!r}: text must be nonempty")
    return scorer.score_batch([_score_pair(query, passage, config)])[0].mean_logprob


class RerankedCandidate(NamedTuple):
    docid: str
    relevance_score: float
    original_rank: int


def rerank(
    scorer: Scorer,
    query: Query,
    candidates: Sequence[tuple[Passage, int]],
    config: RerankConfig = RerankConfig(),
) -> list[RerankedCandidate]:
    """Score every candidate and sort by relevance, descending.

    Ties break by original retriever rank, then passage id, so the output
    is a deterministic permutation of the input regardless of batch
    completion order.
    """
    if not candidates:
        raise ValueError("candidates must be nonempty")
    if not query.text.strip():
        raise ValueError(f"query {query.id!r}: text must be nonempty")
    pairs = [_score_pair(query, passage, config) for passage, _ in candidates]
    batches = [pairs[i : i + config.batch_size] for i in range(0, len(pairs), config.batch_size)]
    if config.max_parallel_batches == 1 or len(batches) == 1:
        batch_results = [scorer.score_batch(batch) for batch in batches]
    else:
        with ThreadPoolExecutor(max_workers=config.max_parallel_batches) as pool:
            batch_results = list(pool.map(scorer.score_batch, batches))
    scores = [result.mean_logprob for results in batch_results for result in results]
    scored = [
        RerankedCandidate(passage.id, score, original_rank)
        for (passage, original_rank), score in zip(candidates, scores)
    ]
    return sorted(scored, key=lambda c: (-c.relevance_score, c.original_rank, c.docid))


def rerank_run(
    scorer: Scorer,
    queries: Iterable[Query] | Mapping[str, Query],
    run: RetrievalRun,
    corpus: Corpus,
    config: RerankConfig = RerankConfig(),
    depth: int = 1000,
    progress_path: str | Path | None = None,
) -> RetrievalRun:
    """Re-rank the top-``depth`` candidates of every query in a run.

    All candidate ids are resolved against the corpus before any scoring
    starts; an unresolvable id aborts the whole run with no partial output.
    When ``progress_path`` is given, completed queries are appended there as
    JSONL and skipped on re-invocation, making interrupted runs resumable.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    by_id = queries_by_id(queries)
    truncated: dict[str, list[RunCandidate]] = {}
    for qid, candidates in run.entries.items():
        if qid not in by_id:
            raise NotFoundError(f"run query {qid!r} has no query record")
        kept = candidates[:depth]
        for cand in kept:
            if cand.docid not in corpus:
                raise NotFoundError(
                    f"query {qid!r}: candidate passage {cand.docid!r} is not in the corpus"
                )
        truncated[qid] = kept

    completed = _load_progress(progress_path) if progress_path else {}
    entries: dict[str, list[RunCandidate]] = {}
    for qid, kept in truncated.items():
        if qid in completed:
            entries[qid] = completed[qid]
            continue
        if not kept:
            entries[qid] = []
        else:
            with_passages = [(corpus.lookup(c.docid), c.rank) for c in kept]
            reranked = rerank(scorer, by_id[qid], with_passages, config)
            entries[qid] = [
                RunCandidate(c.docid, c.relevance_score, rank)
                for rank, c in enumerate(reranked, start=1)
            ]
        if progress_path:
            _append_progress(progress_path, qid, entries[qid])
    return RetrievalRun(entries=entries, tag=run.tag + RERANK_TAG_SUFFIX)


def _load_progress(path: str | Path) -> dict[str, list[RunCandidate]]:
    path = Path(path)
    if not path.exists():
        return {}
    completed: dict[str, list[RunCandidate]] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                completed[record["id"]] = [
                    RunCandidate(str(c["docid"]), float(c["score"]), int(c["rank"]))
                    for c in record["candidates"]
                ]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise DataFormatError(f"{path}:{lineno}: malformed progress record") from None
    return completed


def _append_progress(path: str | Path, qid: str, candidates: list[RunCandidate]) -> None:
    record = {
        "id": qid,
        "candidates": [{"docid": c.docid, "score": c.score, "rank": c.rank} for c in candidates],
    }
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(record, ensure_ascii=False) + "\n")
        handle.flush()
