"""Document embedding and corpus conversion into the engine's file formats."""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .models import load_model
from .splitting import split_sentences

MAGIC = b"FTME"
BINARY_VERSION = 1
REQUIRED_COLUMNS = ("id", "title", "raw_text")
OPTIONAL_COLUMNS = ("domain", "url")


@dataclass(frozen=True)
class EmbedderConfig:
    model: str
    max_sentence_tokens: int = 256
    output_format: str = "binary"  # or "jsonl"
    device: str = "cpu"  # or "accelerator"

    def __post_init__(self) -> None:
        if self.max_sentence_tokens < 1:
            raise ValueError("max_sentence_tokens must be positive")
        if self.output_format not in ("jsonl", "binary"):
            raise ValueError("output_format must be 'jsonl' or 'binary'")
        if self.device not in ("cpu", "accelerator"):
            raise ValueError("device must be 'cpu' or 'accelerator'")


def pool_columns(sentence_matrix: np.ndarray) -> np.ndarray:
    """Column-wise mean; must agree with the engine's own pooling."""
    matrix = np.asarray(sentence_matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError("sentence matrix must have at least one row")
    return matrix.mean(axis=0)


def embed_document(text: str, cfg: EmbedderConfig, model=None) -> np.ndarray:
    """Sentence-split, embed each sentence, and pool columns to one vector."""
    backend = model if model is not None else load_model(
        cfg.model, cfg.max_sentence_tokens, cfg.device
    )
    sentences = split_sentences(text)
    matrix = backend.sentence_vectors(sentences)
    vector = pool_columns(matrix)
    if not np.all(np.isfinite(vector)):
        raise ValueError("model produced non-finite values")
    return vector


def _read_rows(path: Path) -> Iterable[dict]:
    if path.suffix.lower() in (".jsonl", ".ndjson"):
        with path.open("r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError(f"line {lineno} is not an object")
                yield record
        return
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValueError(f"{path} has no header row")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path} is missing required columns: {missing}")
        yield from reader


def _coerce_id(value):
    if isinstance(value, int):
        return value
    text = str(value).strip()
    return int(text) if text.lstrip("-").isdigit() else text


def embed_corpus(input_path: str | Path, cfg: EmbedderConfig, out_path: str | Path) -> int:
    """Embed every article and write the engine's embedding file format.

    Returns the number of records written. The output dimension is read
    from the model and recorded in the file, never assumed.
    """
    input_path = Path(input_path)
    out_path = Path(out_path)
    if not input_path.is_file():
        raise FileNotFoundError(f"input table not found: {input_path}")
    backend = load_model(cfg.model, cfg.max_sentence_tokens, cfg.device)

    records: list[dict] = []
    vectors: list[np.ndarray] = []
    for row in _read_rows(input_path):
        missing = [c for c in REQUIRED_COLUMNS if not row.get(c)]
        if missing:
            identity = row.get("id", "<no id>")
            raise ValueError(f"row {identity!r} is missing {missing}")
        sentences = split_sentences(str(row["raw_text"]))
        matrix = backend.sentence_vectors(sentences)
        if matrix.shape[1] != backend.hidden_size:
            raise ValueError("model returned an unexpected embedding width")
        vector = pool_columns(matrix)
        record = {"id": _coerce_id(row["id"]), "title": str(row["title"])}
        for key in OPTIONAL_COLUMNS:
            if row.get(key):
                record[key] = str(row[key])
        records.append(record)
        vectors.append(vector)
    if not records:
        raise ValueError(f"no articles found in {input_path}")

    matrix = np.vstack(vectors)
    if cfg.output_format == "jsonl":
        _write_jsonl(records, matrix, out_path)
    else:
        _write_binary(records, matrix, out_path)
    return len(records)


def _write_jsonl(records: list[dict], matrix: np.ndarray, out_path: Path) -> None:
    with out_path.open("w", encoding="utf-8") as handle:
        for record, row in zip(records, matrix):
            payload = dict(record)
            payload["embedding"] = row.tolist()
            handle.write(json.dumps(payload) + "\n")


def _write_binary(records: list[dict], matrix: np.ndarray, out_path: Path) -> None:
    n, d = matrix.shape
    with out_path.open("wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<IQQ", BINARY_VERSION, n, d))
        handle.write(matrix.astype("<f4").tobytes())
    meta = out_path.with_name(out_path.name + ".meta.jsonl")
    with meta.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")
