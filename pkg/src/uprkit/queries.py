"""Query records and their JSONL loader.

File schema: one object per line, ``{"id", "question", "answers": [..]}``;
``answers`` may be absent or empty for qrels-only collections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DataFormatError


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    answers: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(f"query {self.id!r}: text must be nonempty")
        object.__setattr__(self, "answers", tuple(self.answers))


def load_queries(path: str | Path) -> list[Query]:
    path = Path(path)
    queries = []
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
            for key in ("id", "question"):
                if not isinstance(record.get(key), str):
                    raise DataFormatError(f"{path}:{lineno}: missing or non-string field {key!r}")
            answers = record.get("answers", [])
            if not isinstance(answers, list) or any(not isinstance(a, str) for a in answers):
                raise DataFormatError(f"{path}:{lineno}: 'answers' must be a list of strings")
            try:
                queries.append(Query(id=record["id"], text=record["question"], answers=tuple(answers)))
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    return queries


def save_queries(queries: Iterable[Query], path: str | Path) -> None:
    lines = [
        json.dumps({"id": q.id, "question": q.text, "answers": list(q.answers)}, ensure_ascii=False)
        for q in queries
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def queries_by_id(queries: Iterable[Query] | Mapping[str, Query]) -> dict[str, Query]:
    if isinstance(queries, Mapping):
        return dict(queries)
    return {q.id: q for q in queries}
