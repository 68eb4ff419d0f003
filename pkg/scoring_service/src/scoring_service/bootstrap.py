"""Build and locally pre-train the tiny backend models.

The encoder-decoder backend is a small T5 trained from scratch on a
generic context-copy denoising objective: given a bag of words in the
encoder, predict a short word sequence that mostly re-uses words present
in that bag. Nothing question- or passage-specific is ever trained on, so
downstream re-ranking stays zero-shot; the objective just teaches the
model to put probability mass on continuation tokens that its context can
explain, which is the only capability likelihood re-ranking needs.

The decoder-only variant is built untrained (random weights); it exists to
exercise the concatenation scoring path.

Run ``python -m scoring_service.bootstrap --out DIR`` to produce a model
directory loadable by the service.
"""

from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers
from transformers import (
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
    T5Config,
    T5ForConditionalGeneration,
)

from .backend import BACKEND_FILE
from .vocabulary import INSTRUCTION_WORDS, PUNCTUATION, all_words

PAD, EOS, UNK, BOS = "<pad>", "</s>", "<unk>", "<s>"

MAX_CONTEXT_TOKENS = 96
MAX_TARGET_TOKENS = 28


def build_tokenizer() -> PreTrainedTokenizerFast:
    """Word-level tokenizer over the closed vocabulary, lowercased."""
    vocab = {PAD: 0, EOS: 1, UNK: 2, BOS: 3}
    for word in all_words():
        vocab[word] = len(vocab)
    tokenizer = Tokenizer(models.WordLevel(vocab, unk_token=UNK))
    tokenizer.normalizer = normalizers.Lowercase()
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    return PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        pad_token=PAD,
        eos_token=EOS,
        unk_token=UNK,
        bos_token=BOS,
    )


def _tiny_t5_config(vocab_size: int) -> T5Config:
    return T5Config(
        vocab_size=vocab_size,
        d_model=64,
        d_kv=16,
        d_ff=192,
        num_layers=2,
        num_decoder_layers=2,
        num_heads=4,
        dropout_rate=0.1,
        decoder_start_token_id=0,
        pad_token_id=0,
        eos_token_id=1,
    )


def _training_example(rng: random.Random, words: list[str]) -> tuple[str, str]:
    context = rng.choices(words, k=rng.randint(12, 60))
    if rng.random() < 0.3:
        context = rng.sample(INSTRUCTION_WORDS, k=4) + context + rng.choices(PUNCTUATION, k=2)
    # 95% copy bias: sharper in-context vs out-of-context likelihood contrast
    # than an even mix, which is the one capability re-ranking leans on.
    target = []
    for _ in range(rng.randint(3, MAX_TARGET_TOKENS - 2)):
        if rng.random() < 0.95:
            target.append(rng.choice(context))
        else:
            target.append(rng.choice(words))
    return " ".join(context), " ".join(target)


def _batch(tokenizer, examples: list[tuple[str, str]]):
    enc = tokenizer(
        [ctx for ctx, _ in examples],
        padding=True,
        truncation=True,
        max_length=MAX_CONTEXT_TOKENS,
        return_tensors="pt",
    )
    dec = tokenizer(
        [tgt for _, tgt in examples],
        padding=True,
        truncation=True,
        max_length=MAX_TARGET_TOKENS,
        return_tensors="pt",
    )
    labels = dec["input_ids"].masked_fill(dec["attention_mask"] == 0, -100)
    return enc["input_ids"], enc["attention_mask"], labels


def copy_contrast(model, tokenizer) -> float:
    """Mean log-likelihood gap between in-context and out-of-context targets."""
    model.eval()
    words = all_words()
    rng = random.Random(1234)
    gaps = []
    with torch.no_grad():
        for _ in range(40):
            context_words = rng.sample(words, k=20)
            inside = " ".join(rng.choices(context_words, k=6))
            outside = " ".join(rng.choices([w for w in words if w not in context_words], k=6))
            scores = []
            for target in (inside, outside):
                enc_ids, enc_mask, labels = _batch(tokenizer, [(" ".join(context_words), target)])
                out = model(input_ids=enc_ids, attention_mask=enc_mask, labels=labels)
                scores.append(-float(out.loss))
            gaps.append(scores[0] - scores[1])
    return sum(gaps) / len(gaps)


def train_encoder_decoder(
    out_dir: str | Path,
    steps: int = 900,
    batch_size: int = 32,
    seed: int = 0,
    log=print,
) -> Path:
    out_dir = Path(out_dir)
    torch.manual_seed(seed)
    rng = random.Random(seed)
    tokenizer = build_tokenizer()
    model = T5ForConditionalGeneration(_tiny_t5_config(len(tokenizer)))
    words = all_words()

    optimizer = torch.optim.AdamW(model.parameters(), lr=1e-3)
    model.train()
    for step in range(steps):
        examples = [_training_example(rng, words) for _ in range(batch_size)]
        enc_ids, enc_mask, labels = _batch(tokenizer, examples)
        loss = model(input_ids=enc_ids, attention_mask=enc_mask, labels=labels).loss
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        if step % 200 == 0 or step == steps - 1:
            log(f"step {step}: loss {loss.item():.4f}")

    gap = copy_contrast(model, tokenizer)
    log(f"copy contrast (in-context minus out-of-context mean logprob): {gap:.3f}")

    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    (out_dir / BACKEND_FILE).write_text(
        json.dumps(
            {
                "model": "tiny-t5-copy",
                "architecture": "encoder_decoder",
                "max_context_tokens": MAX_CONTEXT_TOKENS,
                "copy_contrast": gap,
                "train_steps": steps,
                "seed": seed,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return out_dir


def build_decoder_only(out_dir: str | Path, seed: int = 0) -> Path:
    out_dir = Path(out_dir)
    torch.manual_seed(seed)
    tokenizer = build_tokenizer()
    config = GPT2Config(
        vocab_size=len(tokenizer),
        n_positions=128,
        n_embd=64,
        n_layer=2,
        n_head=4,
        bos_token_id=3,
        eos_token_id=1,
        pad_token_id=0,
    )
    model = GPT2LMHeadModel(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    (out_dir / BACKEND_FILE).write_text(
        json.dumps(
            {
                "model": "tiny-gpt-untrained",
                "architecture": "decoder_only",
                "max_context_tokens": 96,
                "seed": seed,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return out_dir


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="build a scoring backend model directory")
    parser.add_argument("--out", required=True)
    parser.add_argument(
        "--architecture", choices=["encoder_decoder", "decoder_only"], default="encoder_decoder"
    )
    parser.add_argument("--steps", type=int, default=1500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if args.architecture == "encoder_decoder":
        train_encoder_decoder(args.out, steps=args.steps, seed=args.seed)
    else:
        build_decoder_only(args.out, seed=args.seed)
    print(f"backend written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
