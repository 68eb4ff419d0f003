"""Deterministic synthetic retrieval collection for desk-scale checks.

Every query gets one gold passage containing the query's content words and
its unique answer token, plus short keyword-stuffed distractors that BM25
tends to prefer (high term frequency, short length) even though they miss
part of the question vocabulary and never contain the answer. Likelihood
re-ranking with a token-overlap scorer therefore lifts gold passages while
leaving BM25's first choice largely wrong, which is the regime the
directional checks exercise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Corpus, Passage
from .queries import Query

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"


def _pseudo_words(rng: random.Random, count: int, syllables: int = 3) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < count:
        word = "".join(
            rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(syllables)
        )
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


@dataclass
class SyntheticCollection:
    corpus: Corpus
    queries: list[Query]
    gold_ids: dict[str, str]  # query id -> gold passage id


def build_synthetic_collection(
    num_passages: int = 1000,
    num_queries: int = 100,
    seed: int = 13,
) -> SyntheticCollection:
    if num_passages < 4 * num_queries:
        raise ValueError("need at least 4 passages per query (gold + distractors + background)")
    rng = random.Random(seed)
    topic_pool = _pseudo_words(rng, 600)
    filler_pool = _pseudo_words(rng, 60, syllables=2)
    answer_pool = _pseudo_words(rng, num_queries, syllables=4)
    wh_words = ["what", "which", "where", "who"]
    verb_words = ["describes", "mentions", "covers", "links"]

    passages: list[Passage] = []
    queries: list[Query] = []
    gold_ids: dict[str, str] = {}
    for i in range(num_queries):
        qid = f"q{i:03d}"
        content = rng.sample(topic_pool, 4)
        answer = answer_pool[i]
        question = f"{rng.choice(wh_words)} {rng.choice(verb_words)} {' '.join(content)}"
        queries.append(Query(id=qid, text=question, answers=(answer,)))

        # Prompt serialization appends punctuation to the final word, which
        # a whitespace tokenizer cannot match; keep signal words off the end.
        gold_words = list(content) + [answer] + rng.choices(filler_pool, k=49)
        rng.shuffle(gold_words)
        gold_words.append(rng.choice(filler_pool))
        gold_id = f"g{i:03d}"
        gold_ids[qid] = gold_id
        passages.append(Passage(id=gold_id, title=rng.choice(filler_pool), text=" ".join(gold_words)))

        for d in range(2):
            kept = rng.sample(content, 3)
            distractor_words = kept * 3 + rng.choices(filler_pool, k=3)
            rng.shuffle(distractor_words)
            distractor_words.append(rng.choice(filler_pool))
            passages.append(
                Passage(
                    id=f"d{i:03d}_{d}",
                    title=rng.choice(filler_pool),
                    text=" ".join(distractor_words),
                )
            )

    for j in range(num_passages - len(passages)):
        background_words = rng.choices(filler_pool, k=24) + rng.sample(topic_pool, 5)
        rng.shuffle(background_words)
        background_words.append(rng.choice(filler_pool))
        passages.append(
            Passage(id=f"b{j:03d}", title=rng.choice(filler_pool), text=" ".join(background_words))
        )

    rng.shuffle(passages)
    return SyntheticCollection(corpus=Corpus(passages), queries=queries, gold_ids=gold_ids)
