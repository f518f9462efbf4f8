"""Loading, validation, and pooling of document embeddings and metadata."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

MAGIC = b"FTME"
BINARY_VERSION = 1

Format = Literal["jsonl", "binary"]

_META_FIELDS = ("domain", "url", "raw_text")


@dataclass(frozen=True)
class Document:
    """One article's metadata; the embedding row lives in the owning set."""

    id: int | str
    title: str
    raw_text: str | None = None
    domain: str | None = None
    url: str | None = None


@dataclass(frozen=True)
class EmbeddingSet:
    """An immutable n x d embedding matrix with row-aligned documents."""

    documents: tuple[Document, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        n, d = matrix.shape
        if n < 2:
            raise ValueError(f"dataset needs at least 2 documents, got {n}")
        if d < 1:
            raise ValueError("embedding dimension must be positive")
        if len(self.documents) != n:
            raise ValueError(
                f"{len(self.documents)} documents but {n} matrix rows"
            )
        if not np.all(np.isfinite(matrix)):
            raise ValueError("embedding matrix contains non-finite values")
        seen: set = set()
        for doc in self.documents:
            if doc.id in seen:
                raise ValueError(f"duplicate document id: {doc.id!r}")
            seen.add(doc.id)
            if not doc.title:
                raise ValueError(f"document {doc.id!r} has an empty title")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "documents", tuple(self.documents))

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]


def mean_pool(sentence_matrix: np.ndarray) -> np.ndarray:
    """Column-wise arithmetic mean of an s x d sentence-embedding matrix."""
    matrix = np.asarray(sentence_matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError("sentence matrix must have at least one row")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("sentence matrix contains non-finite values")
    return matrix.mean(axis=0)


def _doc_from_record(record: dict, lineno: int) -> Document:
    if "id" not in record or "title" not in record:
        raise ValueError(f"record on line {lineno} is missing id or title")
    doc_id = record["id"]
    if not isinstance(doc_id, (int, str)):
        raise ValueError(f"record on line {lineno}: id must be int or str")
    title = record["title"]
    if not isinstance(title, str) or not title:
        raise ValueError(f"record on line {lineno}: title must be non-empty")
    extras = {k: record.get(k) for k in _META_FIELDS}
    return Document(id=doc_id, title=title, **extras)


def _vector_from_record(record: dict, lineno: int) -> np.ndarray:
    has_embedding = "embedding" in record
    has_sentences = "sentences" in record
    if has_embedding == has_sentences:
        raise ValueError(
            f"record on line {lineno} needs exactly one of"
            " 'embedding' or 'sentences'"
        )
    try:
        if has_embedding:
            vec = np.asarray(record["embedding"], dtype=np.float64)
            if vec.ndim != 1 or vec.size == 0:
                raise ValueError("embedding must be a non-empty flat array")
        else:
            vec = mean_pool(np.asarray(record["sentences"], dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"record on line {lineno}: {exc}") from exc
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"record on line {lineno} has non-finite values")
    return vec


def _iter_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"malformed record on line {lineno}: {exc}") from exc
            if not isinstance(record, dict):
                raise ValueError(f"record on line {lineno} is not an object")
            yield lineno, record


def _load_jsonl(path: Path) -> EmbeddingSet:
    documents: list[Document] = []
    rows: list[np.ndarray] = []
    dim: int | None = None
    for lineno, record in _iter_jsonl(path):
        documents.append(_doc_from_record(record, lineno))
        vec = _vector_from_record(record, lineno)
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise ValueError(
                f"record on line {lineno} has dimension {vec.size},"
                f" expected {dim}"
            )
        rows.append(vec)
    if not rows:
        raise ValueError(f"no records found in {path}")
    return EmbeddingSet(tuple(documents), np.vstack(rows))


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.jsonl")


def _load_binary(path: Path) -> EmbeddingSet:
    data = path.read_bytes()
    if len(data) < 24 or data[:4] != MAGIC:
        raise ValueError(f"{path} is not a {MAGIC.decode()} binary embedding file")
    version, n, d = struct.unpack_from("<IQQ", data, 4)
    if version != BINARY_VERSION:
        raise ValueError(f"unsupported binary version {version}")
    expected = 24 + n * d * 4
    if len(data) != expected:
        raise ValueError(
            f"binary payload is {len(data)} bytes, expected {expected}"
        )
    matrix = (
        np.frombuffer(data, dtype="<f4", count=n * d, offset=24)
        .reshape(n, d)
        .astype(np.float64)
    )
    meta = _meta_path(path)
    if not meta.is_file():
        raise FileNotFoundError(f"missing metadata companion file: {meta}")
    documents = []
    for lineno, record in _iter_jsonl(meta):
        documents.append(_doc_from_record(record, lineno))
    if len(documents) != n:
        raise ValueError(
            f"metadata lists {len(documents)} documents but payload has {n} rows"
        )
    return EmbeddingSet(tuple(documents), matrix)


def load_embeddings(path: str | Path, format: Format) -> EmbeddingSet:
    """Load and validate an embedding file in the given format."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"embedding file not found: {path}")
    if format == "jsonl":
        return _load_jsonl(path)
    if format == "binary":
        return _load_binary(path)
    raise ValueError(f"unknown format: {format!r}")


def _doc_record(doc: Document) -> dict:
    record: dict = {"id": doc.id, "title": doc.title}
    for key in _META_FIELDS:
        value = getattr(doc, key)
        if value is not None:
            record[key] = value
    return record


def write_embeddings(dataset: EmbeddingSet, path: str | Path, format: Format) -> None:
    """Write an embedding set; binary round-trips bit-exactly, jsonl to 1e-12."""
    path = Path(path)
    if format == "jsonl":
        with path.open("w", encoding="utf-8") as handle:
            for doc, row in zip(dataset.documents, dataset.matrix):
                record = _doc_record(doc)
                record["embedding"] = row.tolist()
                handle.write(json.dumps(record) + "\n")
        return
    if format == "binary":
        n, d = dataset.matrix.shape
        payload = dataset.matrix.astype("<f4").tobytes()
        with path.open("wb") as handle:
            handle.write(MAGIC)
            handle.write(struct.pack("<IQQ", BINARY_VERSION, n, d))
            handle.write(payload)
        with _meta_path(path).open("w", encoding="utf-8") as handle:
            for doc in dataset.documents:
                handle.write(json.dumps(_doc_record(doc)) + "\n")
        return
    raise ValueError(f"unknown format: {format!r}")


def make_set(
    ids: Sequence[int | str],
    titles: Sequence[str],
    matrix: np.ndarray,
) -> EmbeddingSet:
    """Convenience constructor for programmatic (mostly synthetic) datasets."""
    docs = tuple(Document(id=i, title=t) for i, t in zip(ids, titles))
    return EmbeddingSet(docs, matrix)
