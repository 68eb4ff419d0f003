"""Model backends: teacher-forced conditional log-likelihood of a continuation.

Two architecture classes are supported. Encoder-decoder models feed the
context to the encoder and score the continuation tokens under the decoder
with teacher-forcing; decoder-only models concatenate context and
continuation and only the continuation positions contribute. All values
are natural-log; ``num_tokens`` is the tokenizer's count for the
continuation. Contexts longer than the advertised limit keep their head
and set the ``truncated`` flag.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import AutoModelForCausalLM, AutoModelForSeq2SeqLM, AutoTokenizer

BACKEND_FILE = "backend.json"


class PairTokenizationError(ValueError):
    """A pair cannot be scored (e.g. the continuation has no tokens)."""


@dataclass(frozen=True)
class BackendInfo:
    model: str
    architecture: str  # "encoder_decoder" | "decoder_only"
    max_context_tokens: int


@dataclass(frozen=True)
class PairScore:
    sum_logprob: float
    num_tokens: int
    mean_logprob: float
    truncated: bool


class _BaseBackend:
    def __init__(self, model, tokenizer, info: BackendInfo):
        self.model = model.eval()
        self.tokenizer = tokenizer
        self.info = info
        # The accelerator is shared; requests are serialized onto it.
        self.lock = threading.Lock()

    def _encode(self, text: str) -> list[int]:
        return self.tokenizer(text, add_special_tokens=False)["input_ids"]

    def _encode_context(self, context: str) -> tuple[list[int], bool]:
        ids = self._encode(context)
        if len(ids) > self.info.max_context_tokens:
            return ids[: self.info.max_context_tokens], True
        return ids, False

    def _encode_continuation(self, continuation: str, position: int) -> list[int]:
        ids = self._encode(continuation)
        if not ids:
            raise PairTokenizationError(f"pair {position}: continuation has no tokens")
        return ids

    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[PairScore]:
        raise NotImplementedError


class EncoderDecoderBackend(_BaseBackend):
    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[PairScore]:
        contexts, truncated_flags, continuations = [], [], []
        for position, (context, continuation) in enumerate(pairs):
            ctx_ids, was_truncated = self._encode_context(context)
            contexts.append(ctx_ids)
            truncated_flags.append(was_truncated)
            continuations.append(self._encode_continuation(continuation, position))

        pad = self.tokenizer.pad_token_id
        start = self.model.config.decoder_start_token_id
        enc_len = max(len(c) for c in contexts)
        dec_len = max(len(c) for c in continuations)
        input_ids = torch.full((len(pairs), enc_len), pad, dtype=torch.long)
        attention_mask = torch.zeros((len(pairs), enc_len), dtype=torch.long)
        decoder_input_ids = torch.full((len(pairs), dec_len), pad, dtype=torch.long)
        for i, (ctx, cont) in enumerate(zip(contexts, continuations)):
            input_ids[i, : len(ctx)] = torch.tensor(ctx)
            attention_mask[i, : len(ctx)] = 1
            shifted = [start] + cont[:-1]
            decoder_input_ids[i, : len(shifted)] = torch.tensor(shifted)

        with torch.no_grad():
            logits = self.model(
                input_ids=input_ids,
                attention_mask=attention_mask,
                decoder_input_ids=decoder_input_ids,
            ).logits
        logprobs = torch.log_softmax(logits.float(), dim=-1)

        results = []
        for i, (cont, was_truncated) in enumerate(zip(continuations, truncated_flags)):
            target = torch.tensor(cont)
            token_lp = logprobs[i, : len(cont)].gather(1, target.unsqueeze(1)).squeeze(1)
            total = float(token_lp.sum())
            results.append(
                PairScore(
                    sum_logprob=total,
                    num_tokens=len(cont),
                    mean_logprob=total / len(cont),
                    truncated=was_truncated,
                )
            )
        return results


class DecoderOnlyBackend(_BaseBackend):
    def score_pairs(self, pairs: list[tuple[str, str]]) -> list[PairScore]:
        bos = self.tokenizer.bos_token_id
        if bos is None:
            raise PairTokenizationError("decoder-only backend needs a bos token")
        max_positions = self.model.config.n_positions

        sequences, spans, flags = [], [], []
        for position, (context, continuation) in enumerate(pairs):
            ctx_ids, was_truncated = self._encode_context(context)
            cont_ids = self._encode_continuation(continuation, position)
            room = max_positions - 1 - len(cont_ids)
            if room < 0:
                raise PairTokenizationError(
                    f"pair {position}: continuation of {len(cont_ids)} tokens exceeds "
                    f"the model's {max_positions}-position window"
                )
            if len(ctx_ids) > room:
                ctx_ids = ctx_ids[:room]
                was_truncated = True
            full = [bos] + ctx_ids + cont_ids
            sequences.append(full)
            spans.append((1 + len(ctx_ids), len(cont_ids)))
            flags.append(was_truncated)

        pad = self.tokenizer.pad_token_id
        seq_len = max(len(s) for s in sequences)
        input_ids = torch.full((len(pairs), seq_len), pad, dtype=torch.long)
        attention_mask = torch.zeros((len(pairs), seq_len), dtype=torch.long)
        for i, seq in enumerate(sequences):
            input_ids[i, : len(seq)] = torch.tensor(seq)
            attention_mask[i, : len(seq)] = 1

        with torch.no_grad():
            logits = self.model(input_ids=input_ids, attention_mask=attention_mask).logits
        logprobs = torch.log_softmax(logits.float(), dim=-1)

        results = []
        for i, ((start, count), was_truncated) in enumerate(zip(spans, flags)):
            target = input_ids[i, start : start + count]
            token_lp = (
                logprobs[i, start - 1 : start + count - 1]
                .gather(1, target.unsqueeze(1))
                .squeeze(1)
            )
            total = float(token_lp.sum())
            results.append(
                PairScore(
                    sum_logprob=total,
                    num_tokens=count,
                    mean_logprob=total / count,
                    truncated=was_truncated,
                )
            )
        return results


def load_backend(model_dir: str | Path) -> _BaseBackend:
    """Load a saved backend directory (weights + tokenizer + backend.json)."""
    model_dir = Path(model_dir)
    meta = json.loads((model_dir / BACKEND_FILE).read_text(encoding="utf-8"))
    info = BackendInfo(
        model=meta["model"],
        architecture=meta["architecture"],
        max_context_tokens=int(meta["max_context_tokens"]),
    )
    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    if info.architecture == "encoder_decoder":
        model = AutoModelForSeq2SeqLM.from_pretrained(model_dir, torch_dtype=torch.float32)
        return EncoderDecoderBackend(model, tokenizer, info)
    if info.architecture == "decoder_only":
        model = AutoModelForCausalLM.from_pretrained(model_dir, torch_dtype=torch.float32)
        return DecoderOnlyBackend(model, tokenizer, info)
    raise ValueError(f"unknown architecture {info.architecture!r} in {model_dir / BACKEND_FILE}")
