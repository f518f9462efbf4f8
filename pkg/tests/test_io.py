import json

import numpy as np
import pytest

from fuzzytopics.io import (
    Document,
    EmbeddingSet,
    load_embeddings,
    make_set,
    mean_pool,
    write_embeddings,
)


def small_set():
    matrix = np.array([[1.0, 2.0, 3.0, 4.0], [5.0, 6.0, 7.0, 8.0], [0.5, -1.0, 2.5, 0.0]])
    docs = (
        Document(id=1, title="alpha", domain="news"),
        Document(id=2, title="beta, with comma", url="https://example.test"),
        Document(id="x3", title="gamma", raw_text="body"),
    )
    return EmbeddingSet(docs, matrix)


def test_load_jsonl_minimal(tmp_path):
    path = tmp_path / "two.jsonl"
    path.write_text(
        json.dumps({"id": 1, "title": "a", "embedding": [1, 2, 3, 4]})
        + "\n"
        + json.dumps({"id": 2, "title": "b", "embedding": [5, 6, 7, 8]})
        + "\n"
    )
    loaded = load_embeddings(path, "jsonl")
    assert len(loaded) == 2
    assert loaded.dim == 4
    assert [d.id for d in loaded.documents] == [1, 2]


def test_load_rejects_dimension_mismatch(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        json.dumps({"id": 1, "title": "a", "embedding": [1, 2, 3, 4]})
        + "\n"
        + json.dumps({"id": 2, "title": "b", "embedding": [5, 6, 7]})
        + "\n"
    )
    with pytest.raises(ValueError, match="dimension"):
        load_embeddings(path, "jsonl")


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_embeddings(tmp_path / "nope.jsonl", "jsonl")


def test_load_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "dup.jsonl"
    rec = {"id": 7, "title": "t", "embedding": [1.0, 2.0]}
    path.write_text(json.dumps(rec) + "\n" + json.dumps(rec) + "\n")
    with pytest.raises(ValueError, match="duplicate"):
        load_embeddings(path, "jsonl")


def test_load_rejects_non_finite(tmp_path):
    path = tmp_path / "nan.jsonl"
    path.write_text(
        json.dumps({"id": 1, "title": "a", "embedding": [1.0, None]})
        + "\n"
        + json.dumps({"id": 2, "title": "b", "embedding": [1.0, 2.0]})
        + "\n"
    )
    with pytest.raises(ValueError):
        load_embeddings(path, "jsonl")


def test_load_rejects_malformed_line(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"id": 1, "title": "a", "embedding": [1, 2]}\nnot json\n')
    with pytest.raises(ValueError, match="line 2"):
        load_embeddings(path, "jsonl")


def test_sentence_records_are_pooled_on_load(tmp_path):
    path = tmp_path / "sent.jsonl"
    path.write_text(
        json.dumps({"id": 1, "title": "a", "sentences": [[1, 2], [3, 4]]})
        + "\n"
        + json.dumps({"id": 2, "title": "b", "embedding": [10, 20]})
        + "\n"
    )
    loaded = load_embeddings(path, "jsonl")
    assert np.allclose(loaded.matrix[0], [2.0, 3.0])
    assert np.allclose(loaded.matrix[1], [10.0, 20.0])


def test_paper_scale_corpus_shape(tmp_path):
    # 3783 records of dimension 2048, the corpus shape the method was run at.
    rng = np.random.default_rng(0)
    matrix = rng.normal(size=(3783, 2048)).astype(np.float32).astype(np.float64)
    dataset = make_set(range(3783), ["t"] * 3783, matrix)
    path = tmp_path / "corpus.ftme"
    write_embeddings(dataset, path, "binary")
    loaded = load_embeddings(path, "binary")
    assert len(loaded) == 3783
    assert loaded.dim == 2048
    assert np.array_equal(loaded.matrix, dataset.matrix)


def test_binary_round_trip_bit_exact(tmp_path):
    dataset = small_set()
    first = tmp_path / "a.ftme"
    second = tmp_path / "b.ftme"
    write_embeddings(dataset, first, "binary")
    loaded = load_embeddings(first, "binary")
    write_embeddings(loaded, second, "binary")
    assert first.read_bytes() == second.read_bytes()
    assert [d.id for d in loaded.documents] == [1, 2, "x3"]
    assert loaded.documents[1].url == "https://example.test"


def test_jsonl_round_trip_within_tolerance(tmp_path):
    dataset = small_set()
    path = tmp_path / "a.jsonl"
    write_embeddings(dataset, path, "jsonl")
    loaded = load_embeddings(path, "jsonl")
    assert np.max(np.abs(loaded.matrix - dataset.matrix)) <= 1e-12
    assert loaded.documents == dataset.documents


def test_empty_and_singleton_sets_rejected():
    with pytest.raises(ValueError):
        make_set([], [], np.empty((0, 3)))
    with pytest.raises(ValueError):
        make_set([1], ["a"], np.ones((1, 3)))


def test_mean_pool_basics():
    assert np.allclose(mean_pool(np.array([[1.0, 2.0], [3.0, 4.0]])), [2.0, 3.0])
    v = np.array([0.25, -1.5, 8.0])
    stacked = np.tile(v, (7, 1))
    assert np.max(np.abs(mean_pool(stacked) - v)) <= 1e-9


def test_mean_pool_paper_shape():
    rng = np.random.default_rng(1)
    sentences = rng.normal(size=(123, 2048))
    pooled = mean_pool(sentences)
    assert pooled.shape == (2048,)
    assert np.allclose(pooled, sentences.mean(axis=0))


def test_mean_pool_rejects_empty():
    with pytest.raises(ValueError):
        mean_pool(np.empty((0, 4)))


def test_mean_pool_permutation_invariant():
    rng = np.random.default_rng(2)
    sentences = rng.normal(size=(11, 6))
    for seed in range(5):
        perm = np.random.default_rng(seed).permutation(11)
        assert np.allclose(mean_pool(sentences[perm]), mean_pool(sentences), atol=1e-12)


def test_binary_requires_metadata_companion(tmp_path):
    dataset = small_set()
    path = tmp_path / "a.ftme"
    write_embeddings(dataset, path, "binary")
    (tmp_path / "a.ftme.meta.jsonl").unlink()
    with pytest.raises(FileNotFoundError, match="metadata"):
        load_embeddings(path, "binary")
