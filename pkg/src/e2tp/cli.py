"""Command-line surface tying the pipeline together.

Commands: ingest, build-step1, build-step2, infer, evaluate, analyze, ablate,
bgca. Every command writes its artifacts deterministically, prints a one-line
summary, and exits 0 on success or nonzero with a diagnostic.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aggregate import load_predictions, load_trace, run_inference, write_predictions, write_trace
from .bgca import augment_cross_domain, build_label_to_text, build_text_to_label
from .config import RunConfig, load_category_vocab, load_config_file, make_backend, resolve
from .errors import ConfigError, E2tpError
from .evaluate import (
    format_report,
    gold_ablation,
    mean_report,
    propagated_error_rate,
    tuple_f1,
)
from .ingest import convert_legacy, load_canonical, write_canonical, write_jsonl
from .step1 import build_step1, write_step1
from .step2 import build_step2, write_step2

_COMMON_FLAGS: list[tuple[str, dict]] = [
    ("--config", {"help": "JSON config document (or set E2TP_CONFIG)"}),
    ("--print-config", {"action": "store_true", "help": "echo the resolved config and exit"}),
    ("--task", {"choices": ["aste", "tasd", "asqp", "acos"]}),
    ("--paradigm", {"choices": ["diet", "f1", "f2"]}),
    ("--seed", {"type": int}),
    ("--seeds", {"help": "comma-separated seeds for multi-run inference"}),
    ("--m", {"type": int, "help": "vote threshold (defaults by task shape and paradigm)"}),
    ("--d", {"type": int, "help": "vote fallback budget (defaults by task shape and paradigm)"}),
    ("--step1-backend", {"help": "oracle:<gold> | replay:<map> | remote:<url> | record:<out>:<inner>"}),
    ("--step2-backend", {"help": "same forms as --step1-backend"}),
    ("--out", {}),
    ("--trace", {}),
    ("--workers", {"type": int}),
    ("--category-vocab", {"help": "file with one category per line"}),
    ("--substring-filter", {"choices": ["on", "off"]}),
    ("--implicit-opinion-as-it", {"choices": ["on", "off"], "dest": "implicit_opinion_as_it"}),
    ("--template", {"choices": ["T1", "T2"], "help": "must match the paradigm's template"}),
    ("--max-new-tokens", {"type": int}),
    ("--batch-size", {"type": int}),
    ("--split", {"choices": ["train", "dev", "test"]}),
]


def _add_common(parser: argparse.ArgumentParser, *, multi_in: bool = False) -> None:
    for flag, kwargs in _COMMON_FLAGS:
        parser.add_argument(flag, **kwargs)
    if multi_in:
        parser.add_argument("--in", dest="in_", nargs="+", metavar="PATH")
    else:
        parser.add_argument("--in", dest="in_", metavar="PATH")


def _flags(args: argparse.Namespace) -> dict:
    mapping = {
        "task": args.task,
        "paradigm": args.paradigm,
        "seed": args.seed,
        "seeds": args.seeds,
        "m": args.m,
        "d": args.d,
        "step1_backend": args.step1_backend,
        "step2_backend": args.step2_backend,
        "in": args.in_,
        "out": args.out,
        "trace": args.trace,
        "workers": args.workers,
        "category_vocab": args.category_vocab,
        "substring_filter": args.substring_filter,
        "implicit_opinion_as_it": args.implicit_opinion_as_it,
        "template": args.template,
        "max_new_tokens": args.max_new_tokens,
        "batch_size": args.batch_size,
        "split": args.split,
    }
    for extra in ("gold", "kind", "target_texts", "t2l_backend", "l2t_backend", "emit_t2l", "emit_l2t"):
        if hasattr(args, extra):
            mapping[extra] = getattr(args, extra)
    return mapping


def _require(cfg: RunConfig, **fields) -> None:
    problems = [f"{name}: required for {cfg.command}" for name, value in fields.items() if value is None]
    if problems:
        raise ConfigError(problems)


def _require_paths_exist(cfg: RunConfig, *paths: str | None) -> None:
    problems = [f"file not found: {p}" for p in paths if p is not None and not Path(p).exists()]
    if problems:
        raise ConfigError(problems)


def _load_in(cfg: RunConfig):
    _require(cfg, task=cfg.task)
    _require(cfg, **{"in": cfg.in_paths or None})
    _require_paths_exist(cfg, *cfg.in_paths)
    return load_canonical(
        cfg.in_paths[0], cfg.task, split=cfg.split, implicit_opinion_as_it=cfg.implicit_opinion_as_it
    )


def _single_inference(cfg: RunConfig, dataset, seed: int | None):
    _require(cfg, paradigm=cfg.paradigm, step1_backend=cfg.step1_backend, step2_backend=cfg.step2_backend)
    step1, finalize1 = make_backend(cfg.step1_backend, cfg)
    step2, finalize2 = make_backend(cfg.step2_backend, cfg)
    result = run_inference(
        dataset,
        cfg.paradigm,
        step1,
        step2,
        vote_config=cfg.vote_config(),
        seed=seed,
        category_vocab=load_category_vocab(cfg),
        substring_filter=cfg.substring_filter,
        max_new_tokens=cfg.max_new_tokens,
        batch_size=cfg.batch_size,
        workers=cfg.workers,
    )
    for finalize in (finalize1, finalize2):
        if finalize is not None:
            finalize()
    return result


def _seeded_out_path(out_path: str, seed: int) -> str:
    path = Path(out_path)
    return str(path.with_name(f"{path.stem}.seed{seed}{path.suffix}"))


def cmd_ingest(cfg: RunConfig) -> str:
    _require(cfg, task=cfg.task, out=cfg.out_path)
    _require(cfg, **{"in": cfg.in_paths or None})
    _require_paths_exist(cfg, *cfg.in_paths)
    dataset = convert_legacy(
        cfg.in_paths[0], cfg.task, split=cfg.split, implicit_opinion_as_it=cfg.implicit_opinion_as_it
    )
    write_canonical(dataset, cfg.out_path)
    return f"ingest: {len(dataset.records)} records -> {cfg.out_path}"


def cmd_build_step1(cfg: RunConfig) -> str:
    _require(cfg, out=cfg.out_path)
    dataset = _load_in(cfg)
    records = build_step1(dataset)
    write_step1(records, cfg.out_path)
    return f"build-step1: {len(records)} records -> {cfg.out_path}"


def cmd_build_step2(cfg: RunConfig) -> str:
    _require(cfg, paradigm=cfg.paradigm, out=cfg.out_path)
    dataset = _load_in(cfg)
    records = build_step2(dataset, cfg.paradigm, cfg.seed)
    write_step2(records, cfg.out_path)
    return f"build-step2[{cfg.paradigm}]: {len(records)} records -> {cfg.out_path}"


def cmd_infer(cfg: RunConfig) -> str:
    _require(cfg, out=cfg.out_path)
    dataset = _load_in(cfg)
    seeds = cfg.seeds if cfg.seeds else [cfg.seed]
    outputs = []
    for seed in seeds:
        result = _single_inference(cfg, dataset, seed)
        out_path = _seeded_out_path(cfg.out_path, seed) if len(seeds) > 1 else cfg.out_path
        write_predictions(result.predictions, out_path, cfg.task)
        if cfg.trace_path:
            trace_path = _seeded_out_path(cfg.trace_path, seed) if len(seeds) > 1 else cfg.trace_path
            write_trace(result.traces, trace_path)
        total = sum(len(t) for t in result.predictions.values())
        outputs.append(f"{out_path} ({total} tuples)")
    return f"infer[{cfg.paradigm}]: {len(dataset.records)} sentences -> " + ", ".join(outputs)


def cmd_evaluate(cfg: RunConfig) -> str:
    _require(cfg, task=cfg.task, gold=cfg.gold_path)
    _require(cfg, **{"in": cfg.in_paths or None})
    _require_paths_exist(cfg, *cfg.in_paths, cfg.gold_path)
    gold = load_canonical(cfg.gold_path, cfg.task, implicit_opinion_as_it=cfg.implicit_opinion_as_it)
    reports = [tuple_f1(load_predictions(path), gold) for path in cfg.in_paths]
    report = reports[0] if len(reports) == 1 else mean_report(reports)
    print(format_report(report))
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, ensure_ascii=False, indent=2)
            f.write("\n")
    return f"evaluate: F1 {report.f1:.4f} over {len(cfg.in_paths)} run(s)"


def cmd_analyze(cfg: RunConfig) -> str:
    _require(cfg, task=cfg.task, gold=cfg.gold_path, trace=cfg.trace_path)
    _require_paths_exist(cfg, cfg.trace_path, cfg.gold_path)
    gold = load_canonical(cfg.gold_path, cfg.task, implicit_opinion_as_it=cfg.implicit_opinion_as_it)
    traces = load_trace(cfg.trace_path)
    rate = propagated_error_rate(traces, gold)
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8") as f:
            json.dump({"propagated_error_rate": rate}, f)
            f.write("\n")
    return f"analyze: propagated error rate {rate:.4f}"


def cmd_ablate(cfg: RunConfig) -> str:
    _require(cfg, kind=cfg.kind, paradigm=cfg.paradigm)
    _require(cfg, step1_backend=cfg.step1_backend, step2_backend=cfg.step2_backend)
    dataset = _load_in(cfg)
    step1, _ = make_backend(cfg.step1_backend, cfg)
    step2, _ = make_backend(cfg.step2_backend, cfg)
    report = gold_ablation(
        dataset,
        cfg.kind,
        cfg.paradigm,
        step1,
        step2,
        vote_config=cfg.vote_config(),
        seed=cfg.seed,
        category_vocab=load_category_vocab(cfg),
        substring_filter=cfg.substring_filter,
        batch_size=cfg.batch_size,
        workers=cfg.workers,
    )
    print(format_report(report, title=f"gold {cfg.kind.value} ablation"))
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, ensure_ascii=False, indent=2)
            f.write("\n")
    return f"ablate[{cfg.kind.value}]: F1 {report.f1:.4f}"


def cmd_bgca(cfg: RunConfig) -> str:
    dataset = _load_in(cfg)
    actions = []
    if cfg.emit_t2l:
        pairs = build_text_to_label(dataset)
        write_jsonl([{"input": i, "target": t} for i, t in pairs], cfg.emit_t2l)
        actions.append(f"{len(pairs)} text-to-label pairs -> {cfg.emit_t2l}")
    if cfg.emit_l2t:
        pairs = build_label_to_text(dataset)
        write_jsonl([{"input": i, "target": t} for i, t in pairs], cfg.emit_l2t)
        actions.append(f"{len(pairs)} label-to-text pairs -> {cfg.emit_l2t}")
    if cfg.target_texts_path or cfg.out_path:
        _require(
            cfg,
            target_texts=cfg.target_texts_path,
            t2l_backend=cfg.t2l_backend,
            l2t_backend=cfg.l2t_backend,
            out=cfg.out_path,
        )
        _require_paths_exist(cfg, cfg.target_texts_path)
        with open(cfg.target_texts_path, encoding="utf-8") as f:
            target_texts = [line.strip() for line in f if line.strip()]
        t2l, _ = make_backend(cfg.t2l_backend, cfg)
        l2t, _ = make_backend(cfg.l2t_backend, cfg)
        mixed = augment_cross_domain(
            dataset,
            target_texts,
            t2l,
            l2t,
            max_new_tokens=cfg.max_new_tokens,
            batch_size=cfg.batch_size,
            workers=cfg.workers,
        )
        write_canonical(mixed, cfg.out_path)
        actions.append(
            f"mixed {len(dataset.records)}+{len(mixed.records) - len(dataset.records)} records -> {cfg.out_path}"
        )
    if not actions:
        raise ConfigError(["bgca: nothing to do (need --emit-t2l, --emit-l2t, or --target-texts/--out)"])
    return "bgca: " + "; ".join(actions)


_COMMANDS = {
    "ingest": (cmd_ingest, False),
    "build-step1": (cmd_build_step1, False),
    "build-step2": (cmd_build_step2, False),
    "infer": (cmd_infer, False),
    "evaluate": (cmd_evaluate, True),
    "analyze": (cmd_analyze, False),
    "ablate": (cmd_ablate, False),
    "bgca": (cmd_bgca, False),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="e2tp", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, multi_in) in _COMMANDS.items():
        sub = subparsers.add_parser(name)
        _add_common(sub, multi_in=multi_in)
        if name in ("evaluate", "analyze"):
            sub.add_argument("--gold", help="canonical gold file")
        if name == "ablate":
            sub.add_argument("--kind", choices=["aspect", "category", "opinion", "sentiment"])
        if name == "bgca":
            sub.add_argument("--target-texts", dest="target_texts", help="one unlabeled sentence per line")
            sub.add_argument("--t2l-backend", dest="t2l_backend")
            sub.add_argument("--l2t-backend", dest="l2t_backend")
            sub.add_argument("--emit-t2l", dest="emit_t2l", help="write text-to-label training pairs here")
            sub.add_argument("--emit-l2t", dest="emit_l2t", help="write label-to-text training pairs here")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler, _ = _COMMANDS[args.command]
    try:
        file_config = load_config_file(args.config)
        cfg = resolve(args.command, _flags(args), file_config)
        if args.print_config:
            print(json.dumps(cfg.to_dict(), ensure_ascii=False, indent=2))
            return 0
        summary = handler(cfg)
    except E2tpError as exc:
        print(f"e2tp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"e2tp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
