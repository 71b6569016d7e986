"""Tiny offline checkpoints so tests never touch a model hub.

Random weights are fine: the service contract is about protocol shape,
determinism, and context handling, not output quality. Special tokens
(pad/eos/unk, ids 0..2) are suppressed during generation so greedy
decoding always yields visible text.
"""

from pathlib import Path

import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from transformers import (
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
    T5Config,
    T5ForConditionalGeneration,
)

CONTEXT_LIMIT = 64

WORDS = [
    "table", "mean", "energy", "value", "values", "runs", "the", "lists",
    "over", "spread", "alpha", "beta", "shows", "of", "cell", "row",
    "stays", "small", "each", "grows", "with", "1", "2", "6", ":", ".",
    "</s>",
]


def _save_tokenizer(path: Path) -> None:
    vocab = {"<pad>": 0, "<eos>": 1, "<unk>": 2}
    for word in WORDS:
        vocab.setdefault(word, len(vocab))
    inner = Tokenizer(WordLevel(vocab, unk_token="<unk>"))
    inner.pre_tokenizer = Whitespace()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=inner,
        pad_token="<pad>",
        eos_token="<eos>",
        unk_token="<unk>",
        model_max_length=CONTEXT_LIMIT,
    )
    tokenizer.save_pretrained(path)


def build_tiny_seq2seq(path: Path) -> None:
    _save_tokenizer(path)
    torch.manual_seed(0)
    model = T5ForConditionalGeneration(
        T5Config(
            vocab_size=len(WORDS) + 3,
            d_model=32,
            d_ff=64,
            d_kv=8,
            num_layers=2,
            num_heads=2,
            decoder_start_token_id=0,
            pad_token_id=0,
            eos_token_id=1,
        )
    )
    model.generation_config.suppress_tokens = [0, 1, 2]
    model.save_pretrained(path)


def build_tiny_causal(path: Path) -> None:
    _save_tokenizer(path)
    torch.manual_seed(1)
    model = GPT2LMHeadModel(
        GPT2Config(
            vocab_size=len(WORDS) + 3,
            n_positions=CONTEXT_LIMIT,
            n_embd=32,
            n_layer=2,
            n_head=2,
            bos_token_id=1,
            eos_token_id=1,
        )
    )
    model.generation_config.suppress_tokens = [0, 1, 2]
    model.save_pretrained(path)


@pytest.fixture(scope="session")
def tiny_models(tmp_path_factory: pytest.TempPathFactory) -> dict[str, str]:
    root = tmp_path_factory.mktemp("models")
    sep_dir = root / "tiny-sep"
    plain_dir = root / "tiny-plain"
    build_tiny_seq2seq(sep_dir)
    build_tiny_causal(plain_dir)
    return {"sep": str(sep_dir), "plain": str(plain_dir)}
