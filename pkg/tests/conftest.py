"""Shared fixtures: the worked shared-elements example."""

from __future__ import annotations

import pytest

from e2tp.core import AnnotatedSentence, SentimentTuple, Task
from e2tp.ingest import DatasetFile


@pytest.fixture
def quad_example() -> AnnotatedSentence:
    """The shared-elements worked example: two quads sharing opinion and sentiment."""
    return AnnotatedSentence(
        id="r1",
        text="the sushi at this place is perfect and the view is perfect",
        tuples=(
            SentimentTuple("sushi", "positive", category="food", opinion="perfect"),
            SentimentTuple("view", "positive", category="location", opinion="perfect"),
        ),
    )


@pytest.fixture
def quad_dataset(quad_example) -> DatasetFile:
    return DatasetFile(task=Task.ASQP, records=[quad_example], split="train")
