"""Teacher-forced fine-tuning on input/target files, with a manifest.

Defaults follow the reference schedule: batch size 16 everywhere, learning
rate 3e-4 for first-step models and 1e-4 for second-step models, 20 epochs
unless the caller's schedule says otherwise.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch.utils.data import DataLoader

from .data import load_pairs
from .model import TINY_RANDOM, build_backbone

STEP1_LEARNING_RATE = 3e-4
STEP2_LEARNING_RATE = 1e-4
DEFAULT_BATCH_SIZE = 16
DEFAULT_EPOCHS = 20


@dataclass
class TrainJob:
    """Everything one fine-tuning run needs; defaults mirror the reference schedule."""

    dataset_path: str
    output_dir: str
    learning_rate: float
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    backbone: str = TINY_RANDOM
    max_input_length: int = 512
    max_target_length: int = 128
    seed: int = 0
    label: str = "custom"


def step1_job(dataset_path: str, output_dir: str, **overrides) -> TrainJob:
    """Default first-step job: lr 3e-4, batch 16."""
    params = dict(learning_rate=STEP1_LEARNING_RATE, label="step1")
    params.update(overrides)
    return TrainJob(dataset_path=dataset_path, output_dir=output_dir, **params)


def step2_job(dataset_path: str, output_dir: str, **overrides) -> TrainJob:
    """Default second-step job: lr 1e-4, batch 16."""
    params = dict(learning_rate=STEP2_LEARNING_RATE, label="step2")
    params.update(overrides)
    return TrainJob(dataset_path=dataset_path, output_dir=output_dir, **params)


def train(job: TrainJob) -> Path:
    """Fine-tune the backbone with teacher forcing; write checkpoint + manifest.

    The dataset is fully validated before any training step runs. Returns the
    checkpoint directory.
    """
    pairs = load_pairs(job.dataset_path)
    torch.manual_seed(job.seed)
    model, tokenizer = build_backbone(job.backbone)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=job.learning_rate)

    def collate(batch):
        encoded = tokenizer(
            [p.input_text for p in batch],
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=job.max_input_length,
        )
        targets = tokenizer(
            [p.target_text for p in batch],
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=job.max_target_length,
        )
        labels = targets["input_ids"].masked_fill(targets["input_ids"] == tokenizer.pad_token_id, -100)
        encoded["labels"] = labels
        return encoded

    loader = DataLoader(pairs, batch_size=job.batch_size, shuffle=False, collate_fn=collate)
    losses: list[float] = []
    for _ in range(job.epochs):
        for batch in loader:
            optimizer.zero_grad()
            loss = model(**batch).loss
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))

    output_dir = Path(job.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(output_dir)
    tokenizer.save_pretrained(output_dir)
    manifest = {
        **asdict(job),
        "records": len(pairs),
        "steps": len(losses),
        "first_loss": losses[0] if losses else None,
        "final_loss": losses[-1] if losses else None,
    }
    with open(output_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return output_dir
