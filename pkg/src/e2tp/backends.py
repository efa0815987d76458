"""Pluggable text-generation backends: gold oracle, replay, and remote client.

All backends satisfy one contract: outputs are returned in input order, one
per input. The oracle and replay backends are pure; the remote client speaks
the POST /generate wire protocol with bounded-backoff retries.
"""

from __future__ import annotations

import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .core import ElementKind, normalize_text
from .errors import (
    RemoteUnavailable,
    ReplayMiss,
    Timeout,
    UnknownSentence,
    UnparseableInput,
)
from .ingest import DatasetFile, read_jsonl, write_jsonl
from .step2 import ARROW_MULTI, ARROW_SINGLE, TaskPrompt, Template, render_target

DEFAULT_MAX_NEW_TOKENS = 128
DEFAULT_BATCH_SIZE = 16


@dataclass(frozen=True)
class GenerationRequest:
    """An ordered batch of inputs for greedy decoding."""

    inputs: tuple[str, ...]
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    decoding: str = "greedy"

    def __post_init__(self) -> None:
        if not self.inputs:
            raise ValueError("a generation request needs at least one input")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")


class Backend:
    """Interface: map a batch of inputs to order-aligned outputs."""

    def generate(self, request: GenerationRequest) -> list[str]:
        raise NotImplementedError


_STEP1_PATTERN = re.compile(
    r"^(?P<text>.*) ⇒ what (?P<plural>aspects|categories|opinions|sentiments)\?$",
    re.DOTALL,
)

_PLURAL_TO_KIND = {kind.plural: kind for kind in ElementKind}
_NAME_TO_KIND = {kind.value: kind for kind in ElementKind}
_MARKER_TO_KIND = {kind.marker: kind for kind in ElementKind}


def parse_step1_input(input_text: str) -> tuple[str, ElementKind] | None:
    """Recover (sentence text, queried kind) from a first-step input."""
    match = _STEP1_PATTERN.match(input_text)
    if not match:
        return None
    return match.group("text"), _PLURAL_TO_KIND[match.group("plural")]


def _parse_task_prompt(raw: str) -> TaskPrompt | None:
    names = raw.split(", ")
    if all(name in _NAME_TO_KIND for name in names):
        order = tuple(_NAME_TO_KIND[name] for name in names)
        if len(set(order)) == len(order) and len(order) >= 2:
            return TaskPrompt(order, Template.T1)
    markers = raw.split(" ")
    if all(marker in _MARKER_TO_KIND for marker in markers):
        order = tuple(_MARKER_TO_KIND[marker] for marker in markers)
        if len(set(order)) == len(order) and len(order) >= 2:
            return TaskPrompt(order, Template.T2)
    return None


def parse_step2_input(input_text: str) -> tuple[str, str, TaskPrompt] | None:
    """Recover (sentence text, anchor value, prompt) from a second-step input.

    Scans ": " splits right-to-left so a task prompt is recognized even when
    the sentence itself contains colons, then splits the head on the last
    arrow occurrence.
    """
    cut = len(input_text)
    while True:
        cut = input_text.rfind(": ", 0, cut)
        if cut < 0:
            return None
        prompt = _parse_task_prompt(input_text[cut + 2 :])
        if prompt is None:
            continue
        head = input_text[:cut]
        arrow_at = max(head.rfind(f" {ARROW_SINGLE} "), head.rfind(f" {ARROW_MULTI} "))
        if arrow_at < 0:
            continue
        text = head[:arrow_at]
        anchor = head[arrow_at + 3 :]
        if not text or not anchor:
            continue
        return text, anchor, prompt


class OracleBackend(Backend):
    """Answers pipeline inputs from gold annotations; the test-time oracle.

    First-step inputs get the gold per-tuple value list; second-step inputs
    get the gold tuples containing the anchor, rendered under the recovered
    prompt. Unknown sentences raise.
    """

    def __init__(self, gold: DatasetFile) -> None:
        self.gold = gold
        self._by_text = {record.text: record for record in gold.records}

    def answer(self, input_text: str) -> str:
        step1 = parse_step1_input(input_text)
        if step1 is not None:
            text, kind = step1
            record = self._by_text.get(text)
            if record is None:
                raise UnknownSentence(f"no gold record with text {text!r}")
            return ", ".join(t.value(kind) for t in record.tuples)  # type: ignore[misc]
        step2 = parse_step2_input(input_text)
        if step2 is not None:
            text, anchor_value, prompt = step2
            record = self._by_text.get(text)
            if record is None:
                raise UnknownSentence(f"no gold record with text {text!r}")
            anchor_kind = prompt.order[0]
            matching = [
                t for t in record.tuples if t.value(anchor_kind) == normalize_text(anchor_value)
            ]
            if not matching:
                return ""
            return render_target(matching, prompt)
        raise UnparseableInput(f"not a pipeline input: {input_text!r}")

    def generate(self, request: GenerationRequest) -> list[str]:
        return [self.answer(input_text) for input_text in request.inputs]


def oracle_answer(input_text: str, gold: DatasetFile) -> str:
    """One-shot oracle query; see OracleBackend."""
    return OracleBackend(gold).answer(input_text)


class ReplayBackend(Backend):
    """Replays a recorded input→output map; exact offline reproduction."""

    def __init__(self, mapping: dict[str, str]) -> None:
        self.mapping = dict(mapping)

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayBackend":
        mapping = {row["input"]: row["output"] for row in read_jsonl(path)}
        return cls(mapping)

    def generate(self, request: GenerationRequest) -> list[str]:
        outputs = []
        for input_text in request.inputs:
            if input_text not in self.mapping:
                raise ReplayMiss(input_text)
            outputs.append(self.mapping[input_text])
        return outputs


@dataclass
class RecordingBackend(Backend):
    """Wraps a backend and records every (input, output) pair it sees."""

    inner: Backend
    records: dict[str, str] = field(default_factory=dict)

    def generate(self, request: GenerationRequest) -> list[str]:
        outputs = self.inner.generate(request)
        for input_text, output in zip(request.inputs, outputs):
            self.records[input_text] = output
        return outputs

    def save(self, path: str | Path) -> None:
        write_jsonl([{"input": k, "output": v} for k, v in self.records.items()], path)

    def to_replay(self) -> ReplayBackend:
        return ReplayBackend(self.records)


class RemoteBackend(Backend):
    """Client for the POST /generate wire protocol.

    Retries 503 (model not ready), connection failures, and timeouts with
    bounded exponential backoff; a partial batch failure fails the whole
    batch so order alignment is never violated.
    """

    def __init__(
        self,
        url: str,
        *,
        timeout: float = 30.0,
        retries: int = 5,
        backoff: float = 0.25,
        max_backoff: float = 4.0,
    ) -> None:
        self.url = url if url.rstrip("/").endswith("/generate") else url.rstrip("/") + "/generate"
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.max_backoff = max_backoff

    def generate(self, request: GenerationRequest) -> list[str]:
        body = {
            "inputs": list(request.inputs),
            "max_new_tokens": request.max_new_tokens,
            "decoding": request.decoding,
        }
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(min(self.backoff * 2 ** (attempt - 1), self.max_backoff))
            try:
                response = requests.post(self.url, json=body, timeout=self.timeout)
            except requests.Timeout as exc:
                last_error = Timeout(f"{self.url}: request timed out after {self.timeout}s")
                last_error.__cause__ = exc
                continue
            except requests.ConnectionError as exc:
                last_error = RemoteUnavailable(f"{self.url}: connection failed: {exc}")
                continue
            if response.status_code == 503:
                last_error = RemoteUnavailable(f"{self.url}: model not ready (503)")
                continue
            if response.status_code != 200:
                raise RemoteUnavailable(f"{self.url}: HTTP {response.status_code}: {response.text[:200]}")
            try:
                outputs = response.json()["outputs"]
            except (ValueError, KeyError) as exc:
                raise RemoteUnavailable(f"{self.url}: malformed response body") from exc
            if not isinstance(outputs, list) or len(outputs) != len(request.inputs):
                raise RemoteUnavailable(
                    f"{self.url}: got {len(outputs) if isinstance(outputs, list) else 'non-list'} "
                    f"outputs for {len(request.inputs)} inputs"
                )
            return [str(o) for o in outputs]
        assert last_error is not None
        raise last_error


def generate_all(
    backend: Backend,
    inputs: list[str],
    *,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int = 1,
) -> list[str]:
    """Run inputs through a backend in order-aligned batches.

    Results are identical for any worker count; workers only bound how many
    batches are in flight concurrently.
    """
    if not inputs:
        return []
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    batches = [inputs[i : i + batch_size] for i in range(0, len(inputs), batch_size)]

    def run(batch: list[str]) -> list[str]:
        outputs = backend.generate(GenerationRequest(tuple(batch), max_new_tokens=max_new_tokens))
        if len(outputs) != len(batch):
            raise RemoteUnavailable(f"backend returned {len(outputs)} outputs for {len(batch)} inputs")
        return outputs

    if workers <= 1 or len(batches) == 1:
        collected = [run(batch) for batch in batches]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            collected = list(pool.map(run, batches))
    return [output for batch in collected for output in batch]
