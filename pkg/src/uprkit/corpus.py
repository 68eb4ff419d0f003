"""Evidence passage storage: ingest, split, export, and id lookup.

A corpus is immutable once built and held fully in memory; the ingest file
itself is the persistence layer. Supported interchange formats:

* TSV: UTF-8, tab-separated, one header row ``id<TAB>text<TAB>title``.
* JSONL: one object per line with string fields ``id``, ``text``, ``title``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataFormatError

TSV_HEADER = ("id", "text", "title")


@dataclass(frozen=True)
class Passage:
    """One evidence unit: a short text span with an id and optional title."""

    id: str
    title: str
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(
                f"passage {self.id!r}: text must contain at least one non-whitespace token"
            )


class Corpus:
    """An ordered, duplicate-free collection of passages with id lookup."""

    def __init__(self, passages: Iterable[Passage]):
        self._passages: list[Passage] = []
        self._by_id: dict[str, Passage] = {}
        for passage in passages:
            if passage.id in self._by_id:
                raise DataFormatError(f"duplicate passage id {passage.id!r}")
            self._by_id[passage.id] = passage
            self._passages.append(passage)

    def __len__(self) -> int:
        return len(self._passages)

    def __iter__(self) -> Iterator[Passage]:
        return iter(self._passages)

    def __contains__(self, passage_id: str) -> bool:
        return passage_id in self._by_id

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self._passages == other._passages

    def lookup(self, passage_id: str) -> Passage:
        try:
            return self._by_id[passage_id]
        except KeyError:
            raise KeyError(f"unknown passage id {passage_id!r}") from None

    @property
    def passages(self) -> list[Passage]:
        return list(self._passages)


def ingest_passages(path: str | Path, format: str) -> Corpus:
    """Read a passage file into a Corpus, preserving file order.

    Malformed rows and duplicate ids raise :class:`DataFormatError` naming
    the offending line or id.
    """
    path = Path(path)
    if format == "tsv":
        passages = _read_tsv(path)
    elif format == "jsonl":
        passages = _read_jsonl(path)
    else:
        raise ValueError(f"unknown corpus format {format!r}; expected 'tsv' or 'jsonl'")
    try:
        return Corpus(passages)
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def _read_tsv(path: Path) -> list[Passage]:
    passages = []
    with open(path, encoding="utf-8") as handle:
        header = handle.readline()
        if not header:
            raise DataFormatError(f"{path}:1: empty file, expected header 'id\\ttext\\ttitle'")
        if tuple(header.rstrip("\n").split("\t")) != TSV_HEADER:
            raise DataFormatError(f"{path}:1: expected header 'id\\ttext\\ttitle'")
        for lineno, line in enumerate(handle, start=2):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise DataFormatError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
            pid, text, title = fields
            try:
                passages.append(Passage(id=pid, title=title, text=text))
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    return passages


def _read_jsonl(path: Path) -> list[Passage]:
    passages = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise DataFormatError(f"{path}:{lineno}: expected a JSON object")
            for key in ("id", "text"):
                if not isinstance(record.get(key), str):
                    raise DataFormatError(f"{path}:{lineno}: missing or non-string field {key!r}")
            title = record.get("title", "")
            if not isinstance(title, str):
                raise DataFormatError(f"{path}:{lineno}: non-string field 'title'")
            try:
                passages.append(Passage(id=record["id"], title=title, text=record["text"]))
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    return passages


def export_corpus(corpus: Corpus, path: str | Path, format: str) -> None:
    """Write a corpus back to disk; ``ingest_passages`` round-trips it exactly.

    TSV cannot carry tabs or newlines inside fields, so those raise rather
    than silently corrupting the file.
    """
    path = Path(path)
    if format == "tsv":
        lines = ["\t".join(TSV_HEADER)]
        for p in corpus:
            for field in (p.id, p.text, p.title):
                if "\t" in field or "\n" in field:
                    raise DataFormatError(
                        f"passage {p.id!r}: field contains tab or newline; use jsonl format"
                    )
            lines.append(f"{p.id}\t{p.text}\t{p.title}")
    elif format == "jsonl":
        lines = [
            json.dumps({"id": p.id, "text": p.text, "title": p.title}, ensure_ascii=False)
            for p in corpus
        ]
    else:
        raise ValueError(f"unknown corpus format {format!r}; expected 'tsv' or 'jsonl'")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def split_document(doc_text: str, doc_title: str, window: int) -> list[Passage]:
    """Split a document into consecutive non-overlapping word windows.

    Words are maximal runs of non-whitespace. Every output passage except
    possibly the last has exactly ``window`` words; ids are doc-scoped
    sequence numbers starting at "1". Titles do not count toward the window.
    """
    if window < 1:
        raise ValueError(f"window must be a positive integer, got {window}")
    words = doc_text.split()
    count = math.ceil(len(words) / window)
    return [
        Passage(
            id=str(i + 1),
            title=doc_title,
            text=" ".join(words[i * window : (i + 1) * window]),
        )
        for i in range(count)
    ]
