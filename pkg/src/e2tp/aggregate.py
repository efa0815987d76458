"""Inference orchestration and threshold voting with fallback.

A sentence's second-step inputs form one vote group: each input contributes a
set of candidate tuple keys, and a tuple is admitted when strictly more than
`threshold` inputs produced it. If nothing clears the threshold, it is
decremented and re-evaluated, up to `fallbacks` times; the result may stay
empty. Tuples are counted by canonical key, so the same tuple arriving in
different surface orders from different permutations counts as one.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .backends import DEFAULT_BATCH_SIZE, DEFAULT_MAX_NEW_TOKENS, Backend, generate_all
from .core import (
    Element,
    ElementKind,
    SentimentTuple,
    Task,
    canonical_tuple_key,
    elements_from_values,
)
from .errors import ParseError
from .ingest import DatasetFile, read_jsonl, write_jsonl
from .output_parser import enforce_semantics, parse_step2_output
from .step1 import constrain_elements, parse_step1_output, step1_input
from .step2 import Paradigm, Step2Record, arrow_for, prompts_for_anchor, render_input


@dataclass(frozen=True)
class VoteConfig:
    """Vote threshold and fallback budget (the m and d knobs)."""

    threshold: int
    fallbacks: int = 0

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.fallbacks < 0:
            raise ValueError("fallbacks must be >= 0")


# Defaults by (is_quad, is_diet): triplet diet (1,0), triplet full (3,1),
# quad diet (2,1), quad full (11,2).
_VOTE_DEFAULTS = {
    (False, True): VoteConfig(1, 0),
    (False, False): VoteConfig(3, 1),
    (True, True): VoteConfig(2, 1),
    (True, False): VoteConfig(11, 2),
}


def default_vote_config(task: Task, paradigm: str) -> VoteConfig:
    """The recommended (threshold, fallbacks) for a task shape and paradigm."""
    return _VOTE_DEFAULTS[(task.arity == 4, paradigm == Paradigm.DIET)]


@dataclass
class VoteGroup:
    """All second-step candidate sets for one sentence, one set per input."""

    sentence_id: str
    candidate_sets: list[set[str]]

    @property
    def k(self) -> int:
        return len(self.candidate_sets)


def _vote_detail(group: VoteGroup, cfg: VoteConfig) -> tuple[set[str], Counter, int | None]:
    counts: Counter = Counter()
    for candidate_set in group.candidate_sets:
        counts.update(candidate_set)
    threshold = cfg.threshold
    for _ in range(cfg.fallbacks + 1):
        admitted = {key for key, votes in counts.items() if votes > threshold}
        if admitted:
            return admitted, counts, threshold
        threshold -= 1
    return set(), counts, None


def vote(group: VoteGroup, cfg: VoteConfig) -> set[str]:
    """Admit tuples with strictly more than `threshold` votes, relaxing on empty.

    The threshold drops by one and the evaluation repeats while the result is
    empty, at most `fallbacks` extra times; an empty set is a valid outcome.
    """
    admitted, _, _ = _vote_detail(group, cfg)
    return admitted


@dataclass(frozen=True)
class CandidateTrace:
    """Vote bookkeeping for one candidate tuple of one sentence."""

    tuple: SentimentTuple
    votes: int
    supporters: tuple[tuple[str, ElementKind], ...]
    admitted: bool
    admitted_at: int | None


@dataclass
class SentenceTrace:
    """Everything the analyzer needs about one sentence's aggregation."""

    sentence_id: str
    elements: list[Element]
    k: int
    candidates: list[CandidateTrace] = field(default_factory=list)


@dataclass
class InferenceResult:
    """Final predictions plus the per-sentence traces behind them."""

    predictions: dict[str, set[SentimentTuple]]
    traces: list[SentenceTrace]


def run_inference(
    dataset: DatasetFile,
    paradigm: str,
    step1_backend: Backend,
    step2_backend: Backend,
    *,
    vote_config: VoteConfig | None = None,
    seed: int | None = None,
    category_vocab: set[str] | None = None,
    substring_filter: bool = True,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int = 1,
    step1_override: dict[tuple[str, ElementKind], list[str]] | None = None,
) -> InferenceResult:
    """Run the full two-step pipeline over a dataset (labels optional).

    Per sentence: query one element list per role, constrain the values, and
    deduplicate them into anchors with multiplicities; render one second-step
    input per anchor and prompt order (one seeded order per kind under diet,
    all orders under f1/f2); parse, validate, and semantically filter the
    generations; group per sentence and vote. Deterministic for deterministic
    backends, regardless of worker count.

    `step1_override` substitutes the parsed first-step value list for specific
    (sentence id, kind) pairs; overridden queries are never sent to the
    backend.
    """
    task = dataset.task
    cfg = vote_config or default_vote_config(task, paradigm)
    if paradigm == Paradigm.DIET and seed is None:
        raise ValueError("diet inference requires the training-time seed")
    if ElementKind.CATEGORY in task.roles and category_vocab is None:
        observed = {
            t.category for r in dataset.records for t in r.tuples if t.category is not None
        }
        category_vocab = observed or None
    overrides = step1_override or {}

    # Step 1: element queries for every (sentence, kind) not overridden.
    queries: list[str] = []
    slots: list[tuple[str, ElementKind]] = []
    for record in dataset.records:
        for kind in task.roles:
            if (record.id, kind) not in overrides:
                queries.append(step1_input(record.text, kind))
                slots.append((record.id, kind))
    raw_outputs = generate_all(
        step1_backend, queries, max_new_tokens=max_new_tokens, batch_size=batch_size, workers=workers
    )
    parsed: dict[tuple[str, ElementKind], list[str]] = {
        slot: parse_step1_output(raw, slot[1]) for slot, raw in zip(slots, raw_outputs)
    }
    parsed.update(overrides)

    # Constrain values and build the anchor set per sentence.
    elements_by_sentence: dict[str, list[Element]] = {}
    for record in dataset.records:
        values_by_kind = {
            kind: constrain_elements(
                parsed[(record.id, kind)],
                kind,
                record.text,
                category_vocab,
                substring_filter=substring_filter,
            )
            for kind in task.roles
        }
        elements_by_sentence[record.id] = elements_from_values(values_by_kind)

    # Step 2: render every anchored input.
    step2_inputs: list[str] = []
    step2_records: list[Step2Record] = []
    for record in dataset.records:
        for anchor in elements_by_sentence[record.id]:
            for prompt in prompts_for_anchor(task, anchor.kind, paradigm, seed):
                rendered = render_input(record.text, anchor, prompt, paradigm)
                step2_inputs.append(rendered)
                step2_records.append(
                    Step2Record(
                        sentence_id=record.id,
                        anchor=anchor,
                        prompt=prompt,
                        arrow=arrow_for(anchor, paradigm),
                        input_text=rendered,
                        target_text=None,
                        paradigm=paradigm,
                    )
                )
    step2_outputs = generate_all(
        step2_backend, step2_inputs, max_new_tokens=max_new_tokens, batch_size=batch_size, workers=workers
    )

    # Parse, validate, filter; collect per-input candidate key sets.
    texts_by_id = {record.id: record.text for record in dataset.records}
    sets_by_sentence: dict[str, list[set[str]]] = {record.id: [] for record in dataset.records}
    tuple_by_key: dict[str, dict[str, SentimentTuple]] = {record.id: {} for record in dataset.records}
    supporters: dict[str, dict[str, list[tuple[str, ElementKind]]]] = {
        record.id: {} for record in dataset.records
    }
    for source, raw in zip(step2_records, step2_outputs):
        keys: set[str] = set()
        for candidate in parse_step2_output(raw, source.prompt, source):
            checked = enforce_semantics(
                candidate,
                texts_by_id[source.sentence_id],
                category_vocab,
                substring_filter=substring_filter,
            )
            if not checked.valid or checked.tuple is None:
                continue
            key = canonical_tuple_key(checked.tuple, task)
            keys.add(key)
            tuple_by_key[source.sentence_id].setdefault(key, checked.tuple)
        sets_by_sentence[source.sentence_id].append(keys)
        anchor_pair = (source.anchor.value, source.anchor.kind)
        for key in keys:
            bucket = supporters[source.sentence_id].setdefault(key, [])
            if anchor_pair not in bucket:
                bucket.append(anchor_pair)

    # Vote per sentence and assemble traces.
    predictions: dict[str, set[SentimentTuple]] = {}
    traces: list[SentenceTrace] = []
    for record in dataset.records:
        group = VoteGroup(record.id, sets_by_sentence[record.id])
        admitted, counts, admitted_at = _vote_detail(group, cfg)
        predictions[record.id] = {tuple_by_key[record.id][key] for key in admitted}
        trace = SentenceTrace(
            sentence_id=record.id,
            elements=elements_by_sentence[record.id],
            k=group.k,
        )
        for key in sorted(counts):
            trace.candidates.append(
                CandidateTrace(
                    tuple=tuple_by_key[record.id][key],
                    votes=counts[key],
                    supporters=tuple(supporters[record.id].get(key, ())),
                    admitted=key in admitted,
                    admitted_at=admitted_at if key in admitted else None,
                )
            )
        traces.append(trace)
    return InferenceResult(predictions=predictions, traces=traces)


def _tuple_to_dict(t: SentimentTuple) -> dict:
    obj: dict[str, str] = {"aspect": t.aspect}
    if t.category is not None:
        obj["category"] = t.category
    if t.opinion is not None:
        obj["opinion"] = t.opinion
    obj["sentiment"] = t.sentiment
    return obj


def _tuple_from_dict(obj: dict) -> SentimentTuple:
    return SentimentTuple(
        aspect=obj["aspect"],
        sentiment=obj["sentiment"],
        category=obj.get("category"),
        opinion=obj.get("opinion"),
    )


def write_predictions(
    predictions: dict[str, set[SentimentTuple]], path: str | Path, task: Task
) -> None:
    """Write a prediction file: one {sentence_id, tuples} object per line.

    Tuples are sorted by canonical key so output is deterministic.
    """
    rows = []
    for sentence_id, tuples in predictions.items():
        ordered = sorted(tuples, key=lambda t: canonical_tuple_key(t, task))
        rows.append({"sentence_id": sentence_id, "tuples": [_tuple_to_dict(t) for t in ordered]})
    write_jsonl(rows, path)


def load_predictions(path: str | Path) -> dict[str, set[SentimentTuple]]:
    predictions: dict[str, set[SentimentTuple]] = {}
    for row in read_jsonl(path):
        try:
            predictions[row["sentence_id"]] = {_tuple_from_dict(obj) for obj in row["tuples"]}
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed prediction row: {exc}", path=path) from exc
    return predictions


def write_trace(traces: list[SentenceTrace], path: str | Path) -> None:
    """Write per-sentence aggregation traces as JSONL."""
    rows = []
    for trace in traces:
        rows.append(
            {
                "sentence_id": trace.sentence_id,
                "elements": [
                    {"value": e.value, "kind": e.kind.value, "multiplicity": e.multiplicity}
                    for e in trace.elements
                ],
                "k": trace.k,
                "candidates": [
                    {
                        "tuple": _tuple_to_dict(c.tuple),
                        "votes": c.votes,
                        "supporters": [{"value": v, "kind": k.value} for v, k in c.supporters],
                        "admitted": c.admitted,
                        "admitted_at": c.admitted_at,
                    }
                    for c in trace.candidates
                ],
            }
        )
    write_jsonl(rows, path)


def load_trace(path: str | Path) -> list[SentenceTrace]:
    traces = []
    for row in read_jsonl(path):
        try:
            candidates = [
                CandidateTrace(
                    tuple=_tuple_from_dict(c["tuple"]),
                    votes=c["votes"],
                    supporters=tuple((s["value"], ElementKind(s["kind"])) for s in c["supporters"]),
                    admitted=c["admitted"],
                    admitted_at=c.get("admitted_at"),
                )
                for c in row["candidates"]
            ]
            traces.append(
                SentenceTrace(
                    sentence_id=row["sentence_id"],
                    elements=[
                        Element(e["value"], ElementKind(e["kind"]), e["multiplicity"])
                        for e in row["elements"]
                    ],
                    k=row["k"],
                    candidates=candidates,
                )
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed trace row: {exc}", path=path) from exc
    return traces
