"""Thin adapters over pretrained checkpoints.

Everything runs on CPU in eval mode under no_grad, so hidden states are a
pure function of the checkpoint and the input: re-exports are bit-stable.
"""

from __future__ import annotations

import numpy as np
import torch

from .tensor_format import ExportError

_SANE_MAX_LEN = 1_000_000  # some tokenizers report a sentinel "no limit"


class SslEncoder:
    """Speech model adapter: waveform in, all hidden layers out."""

    def __init__(self, model, model_id: str):
        self.model = model.eval()
        self.model_id = model_id

    @classmethod
    def load(cls, model_id: str) -> "SslEncoder":
        from transformers import AutoModel

        try:
            model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise ExportError(f"cannot load SSL model {model_id!r}: {exc}") from exc
        return cls(model, model_id)

    def hidden_stack(self, samples: np.ndarray) -> np.ndarray:
        """All layer activations for one utterance: (layers, frames, dim).

        Layer 0 is the convolutional front-end output; the stack therefore
        has num_hidden_layers + 1 entries.
        """
        values = torch.as_tensor(np.asarray(samples, dtype=np.float32))[None, :]
        with torch.no_grad():
            out = self.model(input_values=values, output_hidden_states=True)
        return torch.stack(out.hidden_states, dim=0)[:, 0].numpy()


class TextEncoder:
    """Text model adapter: token-level final-layer states, with chunking."""

    def __init__(self, tokenizer, model, model_id: str):
        self.tokenizer = tokenizer
        self.model = model.eval()
        self.model_id = model_id
        limit = getattr(self.model.config, "max_position_embeddings", None)
        tok_limit = getattr(tokenizer, "model_max_length", None)
        candidates = [v for v in (limit, tok_limit) if v and v < _SANE_MAX_LEN]
        self.max_tokens = min(candidates) if candidates else _SANE_MAX_LEN

    @classmethod
    def load(cls, model_id: str) -> "TextEncoder":
        from transformers import AutoModel, AutoTokenizer

        try:
            tokenizer = AutoTokenizer.from_pretrained(model_id)
            model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise ExportError(f"cannot load text model {model_id!r}: {exc}") from exc
        return cls(tokenizer, model, model_id)

    def _final_states(self, input_ids: torch.Tensor) -> torch.Tensor:
        with torch.no_grad():
            out = self.model(input_ids=input_ids)
        return out.last_hidden_state[0]

    def token_states(self, text: str) -> tuple[np.ndarray, bool]:
        """Final-layer states for every token: (tokens, dim), chunked flag.

        Texts longer than the model's position budget are split into
        max-length windows whose states are concatenated; the flag records
        that the fallback ran so downstream sidecars can note it.
        """
        if not text.strip():
            raise ExportError("empty transcript")
        encoding = self.tokenizer(text, return_tensors="pt", truncation=False)
        ids = encoding["input_ids"]
        if ids.shape[1] <= self.max_tokens:
            return self._final_states(ids).numpy(), False
        pieces = [
            self._final_states(ids[:, start : start + self.max_tokens])
            for start in range(0, ids.shape[1], self.max_tokens)
        ]
        return torch.cat(pieces, dim=0).numpy(), True

    def sentence_embedding(self, text: str) -> np.ndarray:
        """Mean-pooled final-layer state: one vector per sentence."""
        states, _ = self.token_states(text)
        return states.mean(axis=0)
