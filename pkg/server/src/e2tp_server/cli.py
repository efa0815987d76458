"""Command line for training checkpoints and serving them."""

from __future__ import annotations

import argparse
import json
import sys

from .model import TINY_RANDOM
from .serve import DEFAULT_MAX_BATCH, serve
from .train import DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, TrainJob, step1_job, step2_job, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="e2tp-server", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train_parser = sub.add_parser("train")
    train_parser.add_argument("--data", required=True, help="JSONL file with input/target records")
    train_parser.add_argument("--out", required=True, help="checkpoint output directory")
    train_parser.add_argument("--step", choices=["1", "2"], help="apply the step-1 or step-2 defaults")
    train_parser.add_argument("--lr", type=float, help="override the learning rate")
    train_parser.add_argument("--epochs", type=int, default=None)
    train_parser.add_argument("--batch-size", type=int, default=None)
    train_parser.add_argument("--backbone", default=TINY_RANDOM)
    train_parser.add_argument("--seed", type=int, default=0)

    serve_parser = sub.add_parser("serve")
    serve_parser.add_argument("--model", required=True, help="checkpoint directory")
    serve_parser.add_argument("--port", type=int, required=True)
    serve_parser.add_argument("--host", default="127.0.0.1")
    serve_parser.add_argument("--max-batch", type=int, default=DEFAULT_MAX_BATCH)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        overrides = {"backbone": args.backbone, "seed": args.seed}
        if args.lr is not None:
            overrides["learning_rate"] = args.lr
        if args.epochs is not None:
            overrides["epochs"] = args.epochs
        if args.batch_size is not None:
            overrides["batch_size"] = args.batch_size
        if args.step == "1":
            job = step1_job(args.data, args.out, **overrides)
        elif args.step == "2":
            job = step2_job(args.data, args.out, **overrides)
        else:
            if "learning_rate" not in overrides:
                print("e2tp-server train: error: need --step or an explicit --lr", file=sys.stderr)
                return 2
            overrides.setdefault("epochs", DEFAULT_EPOCHS)
            overrides.setdefault("batch_size", DEFAULT_BATCH_SIZE)
            job = TrainJob(dataset_path=args.data, output_dir=args.out, **overrides)
        try:
            out_dir = train(job)
        except ValueError as exc:
            print(f"e2tp-server train: error: {exc}", file=sys.stderr)
            return 2
        manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
        print(
            f"train[{manifest['label']}]: {manifest['records']} records, "
            f"lr {manifest['learning_rate']}, batch {manifest['batch_size']}, "
            f"loss {manifest['first_loss']:.4f} -> {manifest['final_loss']:.4f}, "
            f"checkpoint {out_dir}"
        )
        return 0
    serve(args.model, args.port, args.host, max_batch=args.max_batch)
    return 0


if __name__ == "__main__":
    sys.exit(main())
