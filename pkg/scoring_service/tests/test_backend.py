import math

import pytest
import torch

from scoring_service.backend import PairTokenizationError, load_backend


@pytest.fixture(scope="module")
def backend(model_dir):
    return load_backend(model_dir)


@pytest.fixture(scope="module")
def decoder_backend(decoder_model_dir):
    return load_backend(decoder_model_dir)


def loss_oracle_encoder_decoder(backend, context, continuation):
    """Independent route to the same number: HF's label loss on a lone pair."""
    tok = backend.tokenizer
    enc = tok(context, return_tensors="pt", add_special_tokens=False)
    labels = tok(continuation, return_tensors="pt", add_special_tokens=False)["input_ids"]
    with torch.no_grad():
        loss = backend.model(
            input_ids=enc["input_ids"], attention_mask=enc["attention_mask"], labels=labels
        ).loss
    return -float(loss) * labels.shape[1]


def loss_oracle_decoder_only(backend, context, continuation):
    tok = backend.tokenizer
    ctx = tok(context, add_special_tokens=False)["input_ids"]
    cont = tok(continuation, add_special_tokens=False)["input_ids"]
    ids = torch.tensor([[tok.bos_token_id] + ctx + cont])
    labels = torch.tensor([[-100] * (1 + len(ctx)) + cont])
    with torch.no_grad():
        loss = backend.model(input_ids=ids, labels=labels).loss
    return -float(loss) * len(cont)


class TestEncoderDecoderBackend:
    def test_num_tokens_is_backend_tokenizer_count(self, backend):
        [result] = backend.score_pairs([("the weaver stored jars", "weaver stored clay")])
        assert result.num_tokens == 3
        # Punctuation splits into its own token under this tokenizer.
        [result] = backend.score_pairs([("anything", "clay jars.")])
        assert result.num_tokens == 3

    def test_values_are_negative_finite_and_consistent(self, backend):
        results = backend.score_pairs(
            [("the weaver stored clay jars", "weaver stored"), ("quiet harbor", "copper tools")]
        )
        for r in results:
            assert r.sum_logprob < 0 and math.isfinite(r.sum_logprob)
            assert r.mean_logprob == pytest.approx(r.sum_logprob / r.num_tokens, abs=1e-12)

    def test_matches_label_loss_oracle(self, backend):
        context = "the weaver stored the clay jars at the stone bridge"
        continuation = "weaver stored clay jars"
        [result] = backend.score_pairs([(context, continuation)])
        assert result.sum_logprob == pytest.approx(
            loss_oracle_encoder_decoder(backend, context, continuation), abs=1e-4
        )

    def test_deterministic_for_identical_batches(self, backend):
        pairs = [("the weaver stored clay", "weaver clay"), ("harbor dock", "iron nails again")]
        first = backend.score_pairs(pairs)
        second = backend.score_pairs(pairs)
        assert first == second

    def test_in_context_continuation_scores_higher(self, backend):
        context = "the weaver stored the clay jars at the stone bridge"
        [inside] = backend.score_pairs([(context, "weaver stored clay jars")])
        [outside] = backend.score_pairs([(context, "copper lamps harbor tower")])
        assert inside.mean_logprob > outside.mean_logprob

    def test_truncation_flag(self, backend):
        long_context = " ".join(["weaver"] * (backend.info.max_context_tokens + 10))
        [result] = backend.score_pairs([(long_context, "weaver")])
        assert result.truncated is True
        [result] = backend.score_pairs([("short context", "weaver")])
        assert result.truncated is False

    def test_empty_continuation(self, backend):
        with pytest.raises(PairTokenizationError, match="pair 1"):
            backend.score_pairs([("ctx", "fine"), ("ctx", "   ")])


class TestDecoderOnlyBackend:
    def test_num_tokens_and_sign(self, decoder_backend):
        [result] = decoder_backend.score_pairs([("the weaver stored", "clay jars")])
        assert result.num_tokens == 2
        assert result.sum_logprob < 0
        assert result.mean_logprob == pytest.approx(result.sum_logprob / 2, abs=1e-12)

    def test_matches_label_loss_oracle(self, decoder_backend):
        context = "the weaver stored the clay jars"
        continuation = "stone bridge again"
        [result] = decoder_backend.score_pairs([(context, continuation)])
        assert result.sum_logprob == pytest.approx(
            loss_oracle_decoder_only(decoder_backend, context, continuation), abs=1e-4
        )

    def test_deterministic(self, decoder_backend):
        pairs = [("quiet harbor town", "iron nails")]
        assert decoder_backend.score_pairs(pairs) == decoder_backend.score_pairs(pairs)

    def test_context_truncation_flag(self, decoder_backend):
        long_context = " ".join(["jars"] * (decoder_backend.info.max_context_tokens + 5))
        [result] = decoder_backend.score_pairs([(long_context, "clay")])
        assert result.truncated is True

    def test_continuation_exceeding_window_is_an_error(self, decoder_backend):
        window = decoder_backend.model.config.n_positions
        too_long = " ".join(["clay"] * (window + 1))
        with pytest.raises(PairTokenizationError, match="exceeds"):
            decoder_backend.score_pairs([("ctx", too_long)])
