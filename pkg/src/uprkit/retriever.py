"""First-stage candidate generation: native BM25 plus imported run files.

The BM25 analyzer lowercases and splits on any non-alphanumeric character;
no stemming, no stopwords. Scoring uses the Okapi form with a configurable
idf variant (default: the non-negative Lucene-style idf).

Run files move candidates in and out of the toolkit:

* TREC: whitespace-separated ``qid Q0 docid rank score tag`` lines.
* JSONL: one object per query, ``{"id", "candidates": [{"docid", "score",
  "rank"}], "tag"}``.

Lines starting with ``#`` are treated as comments in both formats.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .corpus import Corpus
from .errors import DataFormatError, NotFoundError
from .queries import Query

IDF_VARIANTS = ("lucene", "robertson")

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def analyze(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character."""
    return _WORD_RE.findall(text.lower())


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4


@dataclass
class Bm25Index:
    """Inverted index over a corpus, immutable after construction."""

    postings: dict[str, dict[str, int]]  # term -> {passage id: term frequency}
    doc_lengths: dict[str, int]
    avg_doc_length: float
    doc_count: int
    params: Bm25Params
    idf_variant: str = "lucene"


def build_index(
    corpus: Corpus,
    params: Bm25Params = Bm25Params(),
    idf_variant: str = "lucene",
) -> Bm25Index:
    if len(corpus) == 0:
        raise ValueError("cannot index an empty corpus")
    if idf_variant not in IDF_VARIANTS:
        raise ValueError(f"unknown idf variant {idf_variant!r}; expected one of {IDF_VARIANTS}")
    postings: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    for passage in corpus:
        terms = analyze(passage.text)
        doc_lengths[passage.id] = len(terms)
        freqs: dict[str, int] = {}
        for term in terms:
            freqs[term] = freqs.get(term, 0) + 1
        for term, tf in freqs.items():
            postings.setdefault(term, {})[passage.id] = tf
    total = sum(doc_lengths.values())
    return Bm25Index(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=total / len(doc_lengths),
        doc_count=len(doc_lengths),
        params=params,
        idf_variant=idf_variant,
    )


def _idf(index: Bm25Index, doc_freq: int) -> float:
    n = index.doc_count
    if index.idf_variant == "lucene":
        return math.log(1.0 + (n - doc_freq + 0.5) / (doc_freq + 0.5))
    return math.log((n - doc_freq + 0.5) / (doc_freq + 0.5))


def _term_weight(index: Bm25Index, term: str, passage_id: str) -> float:
    plist = index.postings.get(term)
    if not plist:
        return 0.0
    tf = plist.get(passage_id, 0)
    if tf == 0:
        return 0.0
    k1, b = index.params.k1, index.params.b
    norm = 1.0 - b + b * (index.doc_lengths[passage_id] / index.avg_doc_length)
    return _idf(index, len(plist)) * (tf * (k1 + 1.0)) / (tf + k1 * norm)


def bm25_score(index: Bm25Index, query_terms: Sequence[str], passage_id: str) -> float:
    """Okapi BM25 score of one passage for an analyzed query term list."""
    if passage_id not in index.doc_lengths:
        raise NotFoundError(f"passage id {passage_id!r} is not indexed")
    score = 0.0
    for term in query_terms:
        score += _term_weight(index, term, passage_id)
    return score


class RunCandidate(NamedTuple):
    docid: str
    score: float
    rank: int


def retrieve(index: Bm25Index, query: Query, depth: int) -> list[RunCandidate]:
    """Top-``depth`` passages by BM25 score, descending.

    Ties break by passage id ascending; passages scoring <= 0 are excluded,
    so fewer than ``depth`` candidates may come back.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    terms = analyze(query.text)
    scores: dict[str, float] = {}
    for term in terms:
        plist = index.postings.get(term)
        if not plist:
            continue
        for passage_id in plist:
            scores[passage_id] = scores.get(passage_id, 0.0) + _term_weight(index, term, passage_id)
    ranked = sorted(
        ((pid, s) for pid, s in scores.items() if s > 0.0),
        key=lambda item: (-item[1], item[0]),
    )[:depth]
    return [RunCandidate(pid, s, rank) for rank, (pid, s) in enumerate(ranked, start=1)]


@dataclass
class RetrievalRun:
    """Per-query ranked candidate lists produced by one system."""

    entries: dict[str, list[RunCandidate]]
    tag: str = "run"

    def __post_init__(self) -> None:
        for qid, candidates in self.entries.items():
            _check_candidates(qid, candidates)

    def query_ids(self) -> list[str]:
        return list(self.entries)


def _check_candidates(qid: str, candidates: Sequence[RunCandidate]) -> None:
    seen: set[str] = set()
    for i, cand in enumerate(candidates):
        if cand.rank != i + 1:
            raise DataFormatError(
                f"query {qid!r}: rank {cand.rank} at position {i + 1}; ranks must be consecutive from 1"
            )
        if i > 0 and cand.score > candidates[i - 1].score:
            raise DataFormatError(
                f"query {qid!r}: score increases from rank {i} to {i + 1}"
            )
        if cand.docid in seen:
            raise DataFormatError(f"query {qid!r}: duplicate candidate {cand.docid!r}")
        seen.add(cand.docid)


def load_run(path: str | Path, format: str) -> RetrievalRun:
    """Parse a run file, enforcing RetrievalRun invariants.

    Out-of-order or gapped ranks are an error, never silently repaired.
    """
    path = Path(path)
    if format == "trec":
        return _load_trec(path)
    if format == "jsonl":
        return _load_run_jsonl(path)
    raise ValueError(f"unknown run format {format!r}; expected 'trec' or 'jsonl'")


def _load_trec(path: Path) -> RetrievalRun:
    entries: dict[str, list[RunCandidate]] = {}
    tag = "run"
    saw_line = False
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 6:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 6 whitespace-separated fields, got {len(parts)}"
                )
            qid, _, docid, rank_s, score_s, line_tag = parts
            try:
                rank = int(rank_s)
                score = float(score_s)
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: rank or score is not numeric") from None
            if not saw_line:
                tag = line_tag
                saw_line = True
            _append_candidate(entries, qid, RunCandidate(docid, score, rank), path, lineno)
    return RetrievalRun(entries=entries, tag=tag)


def _load_run_jsonl(path: Path) -> RetrievalRun:
    entries: dict[str, list[RunCandidate]] = {}
    tag = "run"
    saw_line = False
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict) or not isinstance(record.get("id"), str):
                raise DataFormatError(f"{path}:{lineno}: expected an object with string field 'id'")
            if not saw_line and isinstance(record.get("tag"), str):
                tag = record["tag"]
                saw_line = True
            qid = record["id"]
            for cand in record.get("candidates", []):
                try:
                    candidate = RunCandidate(str(cand["docid"]), float(cand["score"]), int(cand["rank"]))
                except (KeyError, TypeError, ValueError):
                    raise DataFormatError(
                        f"{path}:{lineno}: candidate needs 'docid', 'score', and 'rank'"
                    ) from None
                _append_candidate(entries, qid, candidate, path, lineno)
            entries.setdefault(qid, [])
    return RetrievalRun(entries=entries, tag=tag)


def _append_candidate(
    entries: dict[str, list[RunCandidate]],
    qid: str,
    cand: RunCandidate,
    path: Path,
    lineno: int,
) -> None:
    current = entries.setdefault(qid, [])
    if cand.rank != len(current) + 1:
        raise DataFormatError(
            f"{path}:{lineno}: query {qid!r} has rank {cand.rank} where {len(current) + 1} was expected"
        )
    if any(c.docid == cand.docid for c in current):
        raise DataFormatError(f"{path}:{lineno}: duplicate candidate {cand.docid!r} for query {qid!r}")
    if current and cand.score > current[-1].score:
        raise DataFormatError(f"{path}:{lineno}: score increases with rank for query {qid!r}")
    current.append(cand)


def save_run(
    run: RetrievalRun,
    path: str | Path,
    format: str,
    header: Iterable[str] = (),
) -> None:
    """Write a run file; ``header`` lines are emitted as ``#`` comments.

    TREC format cannot represent queries with zero candidates; those are
    dropped (JSONL preserves them).
    """
    path = Path(path)
    path.write_text(format_run(run, format, header), encoding="utf-8")


def format_run(run: RetrievalRun, format: str, header: Iterable[str] = ()) -> str:
    lines = [f"# {text}" for text in header]
    if format == "trec":
        for qid, candidates in run.entries.items():
            for cand in candidates:
                lines.append(f"{qid} Q0 {cand.docid} {cand.rank} {cand.score!r} {run.tag}")
    elif format == "jsonl":
        for qid, candidates in run.entries.items():
            lines.append(
                json.dumps(
                    {
                        "id": qid,
                        "candidates": [
                            {"docid": c.docid, "score": c.score, "rank": c.rank}
                            for c in candidates
                        ],
                        "tag": run.tag,
                    },
                    ensure_ascii=False,
                )
            )
    else:
        raise ValueError(f"unknown run format {format!r}; expected 'trec' or 'jsonl'")
    return "\n".join(lines) + "\n"


def fuse_union(runs: Sequence[RetrievalRun], depth: int) -> RetrievalRun:
    """Deduplicated union of candidate lists, round-robin interleaved.

    Per query the output order is run 1's rank 1, run 2's rank 1, run 1's
    rank 2, ..., truncated to ``depth``; fused scores are synthetic
    (1/rank) since the union only feeds a re-ranker.
    """
    if len(runs) < 2:
        raise ValueError(f"fusion needs at least 2 runs, got {len(runs)}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    qids: list[str] = []
    for run in runs:
        for qid in run.entries:
            if qid not in qids:
                qids.append(qid)
    entries: dict[str, list[RunCandidate]] = {}
    for qid in qids:
        lists = [run.entries.get(qid, []) for run in runs]
        fused: list[str] = []
        seen: set[str] = set()
        for position in range(max(len(lst) for lst in lists)):
            for lst in lists:
                if position < len(lst) and lst[position].docid not in seen:
                    seen.add(lst[position].docid)
                    fused.append(lst[position].docid)
        fused = fused[:depth]
        entries[qid] = [
            RunCandidate(docid, 1.0 / rank, rank) for rank, docid in enumerate(fused, start=1)
        ]
    tag = "union(" + ",".join(run.tag for run in runs) + ")"
    return RetrievalRun(entries=entries, tag=tag)
