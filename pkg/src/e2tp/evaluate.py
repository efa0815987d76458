"""Exact-match evaluation: tuple F1, per-role F1, error analysis, ablation.

A predicted tuple is correct iff its canonical key equals a gold key of the
same sentence; scores are micro-averaged over the corpus. Gold and predicted
duplicates collapse to sets before matching.
"""

from __future__ import annotations

from dataclasses import dataclass

from .aggregate import SentenceTrace, VoteConfig, run_inference
from .backends import Backend
from .core import ElementKind, SentimentTuple, canonical_tuple_key, normalize_text
from .errors import MissingTrace, TaskMismatch, UnknownSentenceId
from .ingest import DatasetFile


@dataclass
class EvalReport:
    """Precision/recall/F1 with raw counts; optionally a multi-run breakdown."""

    precision: float
    recall: float
    f1: float
    num_pred: int
    num_gold: int
    num_correct: int
    per_seed: list["EvalReport"] | None = None

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.num_pred, self.num_gold, self.num_correct)

    def to_dict(self) -> dict:
        obj = {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "num_pred": self.num_pred,
            "num_gold": self.num_gold,
            "num_correct": self.num_correct,
        }
        if self.per_seed is not None:
            obj["per_seed"] = [r.to_dict() for r in self.per_seed]
        return obj


def _report(num_pred: int, num_gold: int, num_correct: int) -> EvalReport:
    precision = num_correct / num_pred if num_pred else 0.0
    recall = num_correct / num_gold if num_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(precision, recall, f1, num_pred, num_gold, num_correct)


def mean_report(reports: list[EvalReport]) -> EvalReport:
    """Arithmetic mean of per-run scores, counts summed, runs kept in per_seed."""
    if not reports:
        raise ValueError("mean_report needs at least one report")
    n = len(reports)
    return EvalReport(
        precision=sum(r.precision for r in reports) / n,
        recall=sum(r.recall for r in reports) / n,
        f1=sum(r.f1 for r in reports) / n,
        num_pred=sum(r.num_pred for r in reports),
        num_gold=sum(r.num_gold for r in reports),
        num_correct=sum(r.num_correct for r in reports),
        per_seed=list(reports),
    )


def _gold_keys(gold: DatasetFile) -> dict[str, set[str]]:
    return {
        record.id: {canonical_tuple_key(t, gold.task) for t in record.tuples}
        for record in gold.records
    }


def tuple_f1(pred: dict[str, set[SentimentTuple]], gold: DatasetFile) -> EvalReport:
    """Micro-averaged exact-match tuple F1 on canonical keys."""
    gold_keys = _gold_keys(gold)
    num_pred = num_gold = num_correct = 0
    for sentence_id in pred:
        if sentence_id not in gold_keys:
            raise UnknownSentenceId(f"predicted sentence id {sentence_id!r} is not in the gold file")
    for sentence_id, keys in gold_keys.items():
        pred_keys = {canonical_tuple_key(t, gold.task) for t in pred.get(sentence_id, set())}
        num_pred += len(pred_keys)
        num_gold += len(keys)
        num_correct += len(pred_keys & keys)
    return _report(num_pred, num_gold, num_correct)


def element_f1(
    pred_elements: dict[str, set[str]], gold: DatasetFile, kind: ElementKind
) -> EvalReport:
    """Per-role exact-match F1 on deduplicated value sets, micro-averaged."""
    if kind not in gold.task.roles:
        raise TaskMismatch(f"{kind.value} is not a role of task {gold.task.value}")
    num_pred = num_gold = num_correct = 0
    gold_values = {
        record.id: {t.value(kind) for t in record.tuples} for record in gold.records
    }
    for sentence_id in pred_elements:
        if sentence_id not in gold_values:
            raise UnknownSentenceId(f"predicted sentence id {sentence_id!r} is not in the gold file")
    for sentence_id, values in gold_values.items():
        pred_values = {normalize_text(v) for v in pred_elements.get(sentence_id, set())}
        num_pred += len(pred_values)
        num_gold += len(values)
        num_correct += len(pred_values & values)
    return _report(num_pred, num_gold, num_correct)


def propagated_error_rate(traces: list[SentenceTrace], gold: DatasetFile) -> float:
    """Share of wrong final tuples supported only by anchors absent from gold.

    A wrong tuple enters the numerator iff none of the anchors that voted for
    it is a gold element of its sentence; mixed-support wrong tuples count in
    the denominator only. 0/0 is 0.
    """
    if not traces:
        raise MissingTrace("propagated-error analysis needs a non-empty trace")
    gold_keys = _gold_keys(gold)
    gold_records = {record.id: record for record in gold.records}
    wrong = avoidable = 0
    for trace in traces:
        if trace.sentence_id not in gold_records:
            raise UnknownSentenceId(f"trace sentence id {trace.sentence_id!r} is not in the gold file")
        record = gold_records[trace.sentence_id]
        gold_elements = {
            (t.value(kind), kind) for t in record.tuples for kind in gold.task.roles
        }
        for candidate in trace.candidates:
            if not candidate.admitted:
                continue
            key = canonical_tuple_key(candidate.tuple, gold.task)
            if key in gold_keys[trace.sentence_id]:
                continue
            if not candidate.supporters:
                raise MissingTrace(
                    f"admitted tuple in sentence {trace.sentence_id!r} has no recorded supporters"
                )
            wrong += 1
            if all(anchor not in gold_elements for anchor in candidate.supporters):
                avoidable += 1
    return avoidable / wrong if wrong else 0.0


def gold_ablation(
    dataset: DatasetFile,
    kind: ElementKind,
    paradigm: str,
    step1_backend: Backend,
    step2_backend: Backend,
    *,
    vote_config: VoteConfig | None = None,
    seed: int | None = None,
    category_vocab: set[str] | None = None,
    substring_filter: bool = True,
    batch_size: int = 16,
    workers: int = 1,
) -> EvalReport:
    """Tuple F1 with one role's first-step output replaced by gold values.

    The ablated role's value lists come straight from the annotations
    (duplicates retained); every other role uses normal predictions.
    """
    if kind not in dataset.task.roles:
        raise TaskMismatch(f"{kind.value} is not a role of task {dataset.task.value}")
    override = {
        (record.id, kind): [t.value(kind) for t in record.tuples]
        for record in dataset.records
    }
    result = run_inference(
        dataset,
        paradigm,
        step1_backend,
        step2_backend,
        vote_config=vote_config,
        seed=seed,
        category_vocab=category_vocab,
        substring_filter=substring_filter,
        batch_size=batch_size,
        workers=workers,
        step1_override=override,  # type: ignore[arg-type]
    )
    return tuple_f1(result.predictions, dataset)


def format_report(report: EvalReport, title: str = "tuple exact match") -> str:
    """Fixed-width table for terminal output."""
    lines = [
        f"{'metric':<24}{'P':>8}{'R':>8}{'F1':>8}{'pred':>7}{'gold':>7}{'hit':>7}",
        f"{title:<24}{report.precision:>8.4f}{report.recall:>8.4f}{report.f1:>8.4f}"
        f"{report.num_pred:>7}{report.num_gold:>7}{report.num_correct:>7}",
    ]
    if report.per_seed:
        for i, run in enumerate(report.per_seed):
            lines.append(
                f"{f'  run {i}':<24}{run.precision:>8.4f}{run.recall:>8.4f}{run.f1:>8.4f}"
                f"{run.num_pred:>7}{run.num_gold:>7}{run.num_correct:>7}"
            )
    return "\n".join(lines)
