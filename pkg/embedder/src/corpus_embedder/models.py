"""Embedding backends, pluggable by model identifier.

A backend reports its hidden size and turns a list of sentences into an
s x d matrix, one row per sentence (the mean of the last hidden layer's
token vectors). Offline identifiers:

  mock-constant:<dim>[:<value>]  every sentence maps to a constant vector
  hash:<dim>                     deterministic token-hashing pseudo-embedder

Any other identifier is treated as a pretrained transformer checkpoint and
loaded through the optional `transformers` dependency.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np


class ConstantModel:
    """Every sentence embeds to the same vector; test and plumbing aid."""

    def __init__(self, dim: int, value: float = 1.0):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.hidden_size = dim
        self.vector = np.full(dim, value, dtype=np.float64)

    def sentence_vectors(self, sentences: list[str]) -> np.ndarray:
        if not sentences:
            raise ValueError("no sentences to embed")
        return np.tile(self.vector, (len(sentences), 1))


class HashingModel:
    """Deterministic offline pseudo-embedder: tokens hash to unit vectors.

    Not a language model; it exists so the full corpus-to-report pipeline
    can run end to end where no checkpoint is available.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.hidden_size = dim

    def _token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.hidden_size)
        return vec / math.sqrt(self.hidden_size)

    def sentence_vectors(self, sentences: list[str]) -> np.ndarray:
        if not sentences:
            raise ValueError("no sentences to embed")
        out = np.zeros((len(sentences), self.hidden_size), dtype=np.float64)
        for i, sentence in enumerate(sentences):
            tokens = sentence.lower().split()
            if not tokens:
                continue
            acc = np.zeros(self.hidden_size)
            for token in tokens:
                acc += self._token_vector(token)
            out[i] = acc / len(tokens)
        return out


class TransformerModel:
    """Last-hidden-layer embeddings from a pretrained transformer."""

    def __init__(self, identifier: str, max_tokens: int = 256, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise RuntimeError(
                "transformer backends need the optional 'transformers' extra"
            ) from exc
        self._torch = torch
        resolved = "cuda" if device == "accelerator" else "cpu"
        self.tokenizer = AutoTokenizer.from_pretrained(identifier)
        self.model = AutoModel.from_pretrained(identifier).to(resolved).eval()
        self.device = resolved
        self.max_tokens = max_tokens
        self.hidden_size = int(self.model.config.hidden_size)

    def sentence_vectors(self, sentences: list[str]) -> np.ndarray:
        if not sentences:
            raise ValueError("no sentences to embed")
        torch = self._torch
        out = np.zeros((len(sentences), self.hidden_size), dtype=np.float64)
        with torch.no_grad():
            for i, sentence in enumerate(sentences):
                encoded = self.tokenizer(
                    sentence,
                    truncation=True,
                    max_length=self.max_tokens,
                    return_tensors="pt",
                ).to(self.device)
                hidden = self.model(**encoded).last_hidden_state[0]
                if "attention_mask" in encoded:
                    mask = encoded["attention_mask"][0].bool()
                    hidden = hidden[mask]
                out[i] = hidden.mean(dim=0).cpu().numpy()
        return out


def load_model(identifier: str, max_tokens: int = 256, device: str = "cpu"):
    """Resolve a model identifier to a backend instance."""
    if identifier.startswith("mock-constant:"):
        parts = identifier.split(":")
        dim = int(parts[1])
        value = float(parts[2]) if len(parts) > 2 else 1.0
        return ConstantModel(dim, value)
    if identifier.startswith("hash:"):
        return HashingModel(int(identifier.split(":")[1]))
    return TransformerModel(identifier, max_tokens=max_tokens, device=device)
