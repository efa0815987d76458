"""Server test fixtures: training files produced by the pipeline toolkit."""

from __future__ import annotations

import random

import pytest

from e2tp.core import AnnotatedSentence, SentimentTuple, Task
from e2tp.ingest import DatasetFile, write_canonical
from e2tp.step1 import build_step1, write_step1

ASPECTS = ["sushi", "view", "screen", "service", "pasta", "keyboard", "decor"]
OPINIONS = ["perfect", "tasty", "awful", "bright", "slow", "friendly", "cheap"]


def make_aste_corpus(n_sentences: int, seed: int = 0) -> DatasetFile:
    rng = random.Random(seed)
    records = []
    seen = set()
    for i in range(n_sentences):
        tuples = []
        clauses = []
        for _ in range(rng.randint(1, 2)):
            aspect, opinion = rng.choice(ASPECTS), rng.choice(OPINIONS)
            sentiment = rng.choice(["positive", "neutral", "negative"])
            tuples.append(SentimentTuple(aspect, sentiment, opinion=opinion))
            clauses.append(f"the {aspect} was {opinion}")
        text = " and ".join(clauses)
        while text in seen:
            text += " really"
        seen.add(text)
        records.append(AnnotatedSentence(id=f"s{i:03d}", text=text, tuples=tuple(tuples)))
    return DatasetFile(task=Task.ASTE, records=records, split="train")


@pytest.fixture(scope="session")
def step1_file_50(tmp_path_factory):
    """A 50-record first-step training file built through the pipeline toolkit."""
    base = tmp_path_factory.mktemp("data")
    corpus = make_aste_corpus(17, seed=11)  # 17 sentences x 3 roles = 51 records
    records = build_step1(corpus)[:50]
    path = base / "step1.jsonl"
    write_step1(records, path)
    gold = base / "gold.jsonl"
    write_canonical(corpus, gold)
    return path, gold, corpus
