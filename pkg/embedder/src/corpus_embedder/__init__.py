"""Corpus embedder: article text to the topic engine's embedding files."""

from .embed import EmbedderConfig, embed_corpus, embed_document, pool_columns
from .models import ConstantModel, HashingModel, load_model
from .splitting import split_sentences

__version__ = "0.1.0"

__all__ = [
    "ConstantModel",
    "EmbedderConfig",
    "HashingModel",
    "embed_corpus",
    "embed_document",
    "load_model",
    "pool_columns",
    "split_sentences",
]
