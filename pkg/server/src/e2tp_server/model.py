"""Backbone construction and loading.

The default backbone is a small randomly initialized encoder-decoder with a
byte-level tokenizer, buildable fully offline; any local checkpoint directory
or hub name (when the hub is reachable) can be used instead.
"""

from __future__ import annotations

from pathlib import Path

import torch
from transformers import AutoTokenizer, ByT5Tokenizer, T5Config, T5ForConditionalGeneration

TINY_RANDOM = "tiny-random"


def build_backbone(name_or_path: str = TINY_RANDOM):
    """Return (model, tokenizer) for a backbone name, local directory, or the
    offline tiny-random default."""
    if name_or_path == TINY_RANDOM:
        tokenizer = ByT5Tokenizer()
        config = T5Config(
            vocab_size=max(384, len(tokenizer)),
            d_model=64,
            d_kv=8,
            d_ff=128,
            num_layers=2,
            num_decoder_layers=2,
            num_heads=4,
            decoder_start_token_id=tokenizer.pad_token_id,
            pad_token_id=tokenizer.pad_token_id,
            eos_token_id=tokenizer.eos_token_id,
        )
        model = T5ForConditionalGeneration(config)
        return model, tokenizer
    tokenizer = AutoTokenizer.from_pretrained(name_or_path)
    model = T5ForConditionalGeneration.from_pretrained(name_or_path)
    return model, tokenizer


def load_checkpoint(model_dir: str | Path):
    """Load a trained checkpoint directory written by the trainer."""
    model_dir = Path(model_dir)
    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    model = T5ForConditionalGeneration.from_pretrained(model_dir)
    model.eval()
    return model, tokenizer


@torch.no_grad()
def greedy_generate(model, tokenizer, inputs: list[str], max_new_tokens: int = 128) -> list[str]:
    """Deterministic greedy decoding, order-aligned with the inputs."""
    model.eval()
    encoded = tokenizer(list(inputs), return_tensors="pt", padding=True, truncation=True, max_length=512)
    generated = model.generate(
        **encoded,
        max_new_tokens=max_new_tokens,
        do_sample=False,
        num_beams=1,
    )
    return tokenizer.batch_decode(generated, skip_special_tokens=True)
