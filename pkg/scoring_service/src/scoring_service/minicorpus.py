"""Natural-language demo collection for end-to-end re-ranking checks.

Each question asks who performed an action on an object at a place; the
answer is an occupation word that appears only in that question's gold
passage. Keyword-stuffed distractors repeat the object and place words in
short passages (which keyword ranking tends to prefer) but never contain
the acting subject or its verb. File writers emit the passage TSV and
query JSONL schemas consumed by retrieval toolkits.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from . import vocabulary as V


@dataclass
class MiniPassage:
    id: str
    title: str
    text: str


@dataclass
class MiniQuery:
    id: str
    question: str
    answers: list[str]


@dataclass
class MiniCollection:
    passages: list[MiniPassage]
    queries: list[MiniQuery]
    gold_ids: dict[str, str]


def build_mini_collection(
    num_passages: int = 1000,
    num_queries: int = 50,
    seed: int = 7,
) -> MiniCollection:
    if num_queries > len(V.GOLD_SUBJECTS):
        raise ValueError(f"at most {len(V.GOLD_SUBJECTS)} queries (one unique subject each)")
    if num_passages < 4 * num_queries:
        raise ValueError("need at least 4 passages per query")
    rng = random.Random(seed)
    subjects = rng.sample(V.GOLD_SUBJECTS, num_queries)

    passages: list[MiniPassage] = []
    queries: list[MiniQuery] = []
    gold_ids: dict[str, str] = {}
    for i in range(num_queries):
        qid = f"q{i:03d}"
        subject = subjects[i]
        verb = rng.choice(V.VERBS)
        material, obj = rng.choice(V.MATERIALS), rng.choice(V.OBJECTS)
        p1, p2 = rng.choice(V.PLACE_FIRST), rng.choice(V.PLACE_SECOND)
        queries.append(
            MiniQuery(
                id=qid,
                question=f"who {verb} the {material} {obj} at the {p1} {p2}",
                answers=[subject],
            )
        )

        adj, adj2 = rng.choice(["busy", "quiet", "small", "old"]), rng.choice(["busy", "quiet", "late"])
        o1, o2 = rng.choice(V.PLACE_FIRST), rng.choice(V.PLACE_SECOND)
        gold_id = f"g{i:03d}"
        gold_ids[qid] = gold_id
        gold_text = (
            f"The {adj} {subject} {verb} the {material} {obj} at the {p1} {p2}. "
            f"It was {adj2} near the {o1} {o2}. "
            f"Every morning the {subject} kept the {obj} under the old gate again."
        )
        passages.append(MiniPassage(id=gold_id, title=f"{p1} {p2}", text=gold_text))

        for d in range(3):
            bg = rng.choice(V.BACKGROUND_SUBJECTS)
            distractor_text = (
                f"The {bg} saw the {material} {obj}. "
                f"The {material} {obj} stayed at the {p1} {p2}. "
                f"{material} {obj} and the {p1} {p2} again."
            )
            passages.append(
                MiniPassage(id=f"d{i:03d}_{d}", title=f"{material} {obj}", text=distractor_text)
            )

    for j in range(num_passages - len(passages)):
        bg = rng.choice(V.BACKGROUND_SUBJECTS)
        verb = rng.choice(V.VERBS)
        material, obj = rng.choice(V.MATERIALS), rng.choice(V.OBJECTS)
        p1, p2 = rng.choice(V.PLACE_FIRST), rng.choice(V.PLACE_SECOND)
        text = (
            f"A {bg} {verb} the {material} {obj} near the {p1} {p2}. "
            f"Then the {bg} found the {rng.choice(V.PLACE_FIRST)} {rng.choice(V.PLACE_SECOND)} quiet."
        )
        passages.append(MiniPassage(id=f"b{j:03d}", title=f"{p1} {p2}", text=text))

    rng.shuffle(passages)
    return MiniCollection(passages=passages, queries=queries, gold_ids=gold_ids)


def write_passages_tsv(passages: list[MiniPassage], path: str | Path) -> None:
    lines = ["id\ttext\ttitle"]
    lines.extend(f"{p.id}\t{p.text}\t{p.title}" for p in passages)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_queries_jsonl(queries: list[MiniQuery], path: str | Path) -> None:
    lines = [
        json.dumps({"id": q.id, "question": q.question, "answers": q.answers})
        for q in queries
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
