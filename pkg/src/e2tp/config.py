"""Declarative run configuration: config file + flag merging and validation.

Every CLI flag mirrors a key in a JSON config document (flag wins). The
document's path comes from --config or the E2TP_CONFIG environment variable.
Vote defaults are resolved from the task shape and paradigm when not set.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .aggregate import VoteConfig, default_vote_config
from .backends import (
    Backend,
    OracleBackend,
    RecordingBackend,
    RemoteBackend,
    ReplayBackend,
)
from .core import ElementKind, Task
from .errors import ConfigError
from .ingest import load_canonical
from .step2 import Paradigm

ENV_CONFIG = "E2TP_CONFIG"

_TASKS = {t.value: t for t in Task}
_KINDS = {k.value: k for k in ElementKind}


@dataclass
class RunConfig:
    """Fully resolved settings for one command invocation."""

    command: str
    task: Task | None = None
    paradigm: str | None = None
    seed: int | None = None
    seeds: list[int] | None = None
    threshold: int | None = None
    fallbacks: int | None = None
    step1_backend: str | None = None
    step2_backend: str | None = None
    in_paths: list[str] = field(default_factory=list)
    out_path: str | None = None
    trace_path: str | None = None
    gold_path: str | None = None
    workers: int = 1
    category_vocab_path: str | None = None
    substring_filter: bool = True
    implicit_opinion_as_it: bool = True
    template: str | None = None
    max_new_tokens: int = 128
    batch_size: int = 16
    split: str | None = None
    kind: ElementKind | None = None
    target_texts_path: str | None = None
    t2l_backend: str | None = None
    l2t_backend: str | None = None
    emit_t2l: str | None = None
    emit_l2t: str | None = None

    def vote_config(self) -> VoteConfig:
        assert self.task is not None and self.paradigm is not None
        base = default_vote_config(self.task, self.paradigm)
        return VoteConfig(
            threshold=self.threshold if self.threshold is not None else base.threshold,
            fallbacks=self.fallbacks if self.fallbacks is not None else base.fallbacks,
        )

    def to_dict(self) -> dict:
        """Echo shape for --print-config, with applied vote defaults."""
        obj: dict[str, object] = {"command": self.command}
        if self.task is not None:
            obj["task"] = self.task.value
        if self.paradigm is not None:
            obj["paradigm"] = self.paradigm
            obj["template"] = Paradigm.template(self.paradigm)
            if self.task is not None:
                resolved = self.vote_config()
                obj["m"] = resolved.threshold
                obj["d"] = resolved.fallbacks
        for name, value in (
            ("seed", self.seed),
            ("seeds", self.seeds),
            ("step1_backend", self.step1_backend),
            ("step2_backend", self.step2_backend),
            ("in", self.in_paths or None),
            ("out", self.out_path),
            ("trace", self.trace_path),
            ("gold", self.gold_path),
            ("category_vocab", self.category_vocab_path),
            ("split", self.split),
            ("kind", self.kind.value if self.kind else None),
            ("target_texts", self.target_texts_path),
            ("t2l_backend", self.t2l_backend),
            ("l2t_backend", self.l2t_backend),
            ("emit_t2l", self.emit_t2l),
            ("emit_l2t", self.emit_l2t),
        ):
            if value is not None:
                obj[name] = value
        obj["workers"] = self.workers
        obj["substring_filter"] = "on" if self.substring_filter else "off"
        obj["implicit_opinion_as_it"] = "on" if self.implicit_opinion_as_it else "off"
        obj["max_new_tokens"] = self.max_new_tokens
        obj["batch_size"] = self.batch_size
        return obj


def load_config_file(explicit_path: str | None) -> dict:
    """Read the JSON config document named by --config or E2TP_CONFIG."""
    path = explicit_path or os.environ.get(ENV_CONFIG)
    if not path:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    try:
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file {path} is not valid JSON: {exc.msg}"])
    if not isinstance(obj, dict):
        raise ConfigError([f"config file {path} must hold a JSON object"])
    return obj


def _pick(flag_value, file_config: dict, key: str, default=None):
    if flag_value is not None:
        return flag_value
    if key in file_config and file_config[key] is not None:
        return file_config[key]
    return default


def _parse_switch(value, key: str, problems: list[str], default: bool) -> bool:
    if value is None:
        return default
    if isinstance(value, bool):
        return value
    if str(value) in ("on", "true", "1"):
        return True
    if str(value) in ("off", "false", "0"):
        return False
    problems.append(f"{key}: expected on|off, got {value!r}")
    return default


def _parse_int(value, key: str, problems: list[str], *, minimum: int | None = None) -> int | None:
    if value is None:
        return None
    try:
        parsed = int(value)
    except (TypeError, ValueError):
        problems.append(f"{key}: expected an integer, got {value!r}")
        return None
    if minimum is not None and parsed < minimum:
        problems.append(f"{key}: must be >= {minimum}, got {parsed}")
        return None
    return parsed


def resolve(command: str, flags: dict, file_config: dict) -> RunConfig:
    """Merge flags over the config document and validate every field.

    Raises ConfigError listing every violated field at once.
    """
    problems: list[str] = []
    cfg = RunConfig(command=command)

    task_name = _pick(flags.get("task"), file_config, "task")
    if task_name is not None:
        if str(task_name) in _TASKS:
            cfg.task = _TASKS[str(task_name)]
        else:
            problems.append(f"task: expected one of {sorted(_TASKS)}, got {task_name!r}")

    paradigm = _pick(flags.get("paradigm"), file_config, "paradigm")
    if paradigm is not None:
        if str(paradigm) in Paradigm.ALL:
            cfg.paradigm = str(paradigm)
        else:
            problems.append(f"paradigm: expected one of {list(Paradigm.ALL)}, got {paradigm!r}")

    cfg.seed = _parse_int(_pick(flags.get("seed"), file_config, "seed"), "seed", problems)
    seeds_raw = _pick(flags.get("seeds"), file_config, "seeds")
    if seeds_raw is not None:
        parts = seeds_raw.split(",") if isinstance(seeds_raw, str) else list(seeds_raw)
        seeds = [_parse_int(p, "seeds", problems) for p in parts]
        cfg.seeds = [s for s in seeds if s is not None] or None

    cfg.threshold = _parse_int(_pick(flags.get("m"), file_config, "m"), "m", problems, minimum=0)
    cfg.fallbacks = _parse_int(_pick(flags.get("d"), file_config, "d"), "d", problems, minimum=0)
    workers = _parse_int(_pick(flags.get("workers"), file_config, "workers"), "workers", problems, minimum=1)
    cfg.workers = workers if workers is not None else 1
    max_new = _parse_int(
        _pick(flags.get("max_new_tokens"), file_config, "max_new_tokens"), "max_new_tokens", problems, minimum=1
    )
    cfg.max_new_tokens = max_new if max_new is not None else 128
    batch = _parse_int(_pick(flags.get("batch_size"), file_config, "batch_size"), "batch_size", problems, minimum=1)
    cfg.batch_size = batch if batch is not None else 16

    cfg.step1_backend = _pick(flags.get("step1_backend"), file_config, "step1_backend")
    cfg.step2_backend = _pick(flags.get("step2_backend"), file_config, "step2_backend")
    cfg.t2l_backend = _pick(flags.get("t2l_backend"), file_config, "t2l_backend")
    cfg.l2t_backend = _pick(flags.get("l2t_backend"), file_config, "l2t_backend")

    in_value = _pick(flags.get("in"), file_config, "in")
    if in_value is not None:
        cfg.in_paths = [str(p) for p in in_value] if isinstance(in_value, list) else [str(in_value)]
    cfg.out_path = _pick(flags.get("out"), file_config, "out")
    cfg.trace_path = _pick(flags.get("trace"), file_config, "trace")
    cfg.gold_path = _pick(flags.get("gold"), file_config, "gold")
    cfg.category_vocab_path = _pick(flags.get("category_vocab"), file_config, "category_vocab")
    cfg.split = _pick(flags.get("split"), file_config, "split")
    cfg.target_texts_path = _pick(flags.get("target_texts"), file_config, "target_texts")
    cfg.emit_t2l = _pick(flags.get("emit_t2l"), file_config, "emit_t2l")
    cfg.emit_l2t = _pick(flags.get("emit_l2t"), file_config, "emit_l2t")

    cfg.substring_filter = _parse_switch(
        _pick(flags.get("substring_filter"), file_config, "substring_filter"), "substring_filter", problems, True
    )
    cfg.implicit_opinion_as_it = _parse_switch(
        _pick(flags.get("implicit_opinion_as_it"), file_config, "implicit_opinion_as_it"),
        "implicit_opinion_as_it",
        problems,
        True,
    )

    kind_name = _pick(flags.get("kind"), file_config, "kind")
    if kind_name is not None:
        if str(kind_name) in _KINDS:
            cfg.kind = _KINDS[str(kind_name)]
        else:
            problems.append(f"kind: expected one of {sorted(_KINDS)}, got {kind_name!r}")

    template = _pick(flags.get("template"), file_config, "template")
    if template is not None:
        cfg.template = str(template)
        if cfg.template not in ("T1", "T2"):
            problems.append(f"template: expected T1 or T2, got {template!r}")
        elif cfg.paradigm is not None and cfg.template != Paradigm.template(cfg.paradigm):
            problems.append(
                f"template: paradigm {cfg.paradigm} uses {Paradigm.template(cfg.paradigm)}, "
                f"cannot override with {cfg.template}"
            )

    if cfg.paradigm == Paradigm.DIET and cfg.seed is None and command in ("build-step2", "infer", "ablate"):
        if not (command == "infer" and cfg.seeds):
            problems.append("seed: required for diet runs (no implicit RNG)")

    if problems:
        raise ConfigError(problems)
    return cfg


def make_backend(spec: str, cfg: RunConfig) -> tuple[Backend, Callable[[], None] | None]:
    """Build a backend from its CLI spec string.

    Forms: "oracle:<gold path>", "replay:<map path>", "remote:<url>", and
    "record:<out path>:<inner spec>" which wraps any of the others; the
    returned finalizer saves the recorded map and must run when the command
    finishes.
    """
    kind, _, rest = spec.partition(":")
    if kind == "oracle":
        if cfg.task is None:
            raise ConfigError(["task: required to build an oracle backend"])
        gold = load_canonical(rest, cfg.task, implicit_opinion_as_it=cfg.implicit_opinion_as_it)
        return OracleBackend(gold), None
    if kind == "replay":
        return ReplayBackend.from_file(rest), None
    if kind == "remote":
        return RemoteBackend(rest), None
    if kind == "record":
        out_path, _, inner_spec = rest.partition(":")
        if not out_path or not inner_spec:
            raise ConfigError([f"backend spec {spec!r}: record needs record:<out path>:<inner spec>"])
        inner, inner_finalize = make_backend(inner_spec, cfg)
        recorder = RecordingBackend(inner)

        def finalize() -> None:
            recorder.save(out_path)
            if inner_finalize is not None:
                inner_finalize()

        return recorder, finalize
    raise ConfigError([f"backend spec {spec!r}: unknown kind {kind!r} (oracle|replay|remote|record)"])


def load_category_vocab(cfg: RunConfig) -> set[str] | None:
    """Read a category vocabulary file: one category per line, normalized."""
    if cfg.category_vocab_path is None:
        return None
    from .core import normalize_text

    with open(cfg.category_vocab_path, encoding="utf-8") as f:
        vocab = {normalize_text(line) for line in f if line.strip()}
    return vocab or None
