"""Model loading and inference for one prompt style.

Each style binds one checkpoint. Loading is lazy and happens once;
inference is serialized per model because a single CPU forward pass is
the bottleneck anyway and interleaving torch.manual_seed calls between
concurrent sampled requests would break seed determinism.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import torch
from transformers import (
    AutoConfig,
    AutoModelForCausalLM,
    AutoModelForSeq2SeqLM,
    AutoTokenizer,
)

# ceiling for tokenizer.model_max_length sentinels that mean "unset"
_SANE_LIMIT = 1_000_000
_DEFAULT_LIMIT = 512


class ContextOverflowError(Exception):
    """Prompt does not fit the model's context window."""


@dataclass
class _Loaded:
    tokenizer: object
    model: object
    context_limit: int
    encoder_decoder: bool


class ModelRunner:
    def __init__(self, style: str, model_id: str):
        self.style = style
        self.model_id = model_id
        self._load_lock = threading.Lock()
        self._infer_lock = threading.Lock()
        self._loaded: _Loaded | None = None

    def _ensure_loaded(self) -> _Loaded:
        with self._load_lock:
            if self._loaded is None:
                config = AutoConfig.from_pretrained(self.model_id)
                tokenizer = AutoTokenizer.from_pretrained(self.model_id)
                cls = (
                    AutoModelForSeq2SeqLM
                    if config.is_encoder_decoder
                    else AutoModelForCausalLM
                )
                model = cls.from_pretrained(self.model_id)
                model.eval()
                limit = getattr(config, "max_position_embeddings", None)
                if not limit or limit <= 0:
                    limit = tokenizer.model_max_length
                if not limit or limit > _SANE_LIMIT:
                    limit = _DEFAULT_LIMIT
                self._loaded = _Loaded(
                    tokenizer=tokenizer,
                    model=model,
                    context_limit=int(limit),
                    encoder_decoder=bool(config.is_encoder_decoder),
                )
        return self._loaded

    def generate(
        self, prompt: str, max_new_tokens: int, seed: int | None = None
    ) -> str:
        """Continuation text for the prompt; greedy unless a seed is given."""
        loaded = self._ensure_loaded()
        input_ids = loaded.tokenizer(prompt, return_tensors="pt").input_ids
        length = input_ids.shape[1]
        if length > loaded.context_limit:
            raise ContextOverflowError(
                f"prompt is {length} tokens, context limit is"
                f" {loaded.context_limit}"
            )
        budget = max_new_tokens
        if not loaded.encoder_decoder:
            room = loaded.context_limit - length
            if room < 1:
                raise ContextOverflowError(
                    f"prompt of {length} tokens leaves no room to generate"
                    f" within the {loaded.context_limit}-token context"
                )
            budget = min(budget, room)
        with self._infer_lock:
            if seed is not None:
                torch.manual_seed(seed)
            with torch.no_grad():
                output = loaded.model.generate(
                    input_ids,
                    max_new_tokens=budget,
                    do_sample=seed is not None,
                )
        # decoder-only models echo the prompt ids; return new tokens only
        new_ids = output[0] if loaded.encoder_decoder else output[0][length:]
        return loaded.tokenizer.decode(new_ids, skip_special_tokens=True).strip()
