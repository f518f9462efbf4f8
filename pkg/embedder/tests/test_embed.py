import csv
import json

import numpy as np
import pytest

from corpus_embedder import (
    ConstantModel,
    EmbedderConfig,
    HashingModel,
    embed_corpus,
    embed_document,
    pool_columns,
)


def write_articles_csv(path, rows):
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(
            handle, fieldnames=["id", "title", "raw_text", "domain", "url"]
        )
        writer.writeheader()
        writer.writerows(rows)


def article(i, text=None):
    return {
        "id": str(1000 + i),
        "title": f"Article {i}",
        "raw_text": text or f"Article {i} body. It has two sentences about topic {i % 3}.",
        "domain": "example.test",
        "url": f"https://example.test/{i}",
    }


def test_constant_model_document_is_constant_vector():
    cfg = EmbedderConfig(model="mock-constant:6:2.5")
    vec = embed_document("One sentence. Another sentence.", cfg)
    assert np.array_equal(vec, np.full(6, 2.5))


def test_output_length_equals_hidden_size():
    cfg = EmbedderConfig(model="hash:48")
    vec = embed_document("Some text. More text here.", cfg)
    assert vec.shape == (48,)


def test_embedding_deterministic_across_runs():
    cfg = EmbedderConfig(model="hash:32")
    a = embed_document("Deterministic text, run twice. Same output.", cfg)
    b = embed_document("Deterministic text, run twice. Same output.", cfg)
    assert np.max(np.abs(a - b)) <= 1e-6
    assert np.array_equal(a, b)


def test_pooling_matches_column_mean():
    rng = np.random.default_rng(0)
    matrix = rng.normal(size=(9, 17))
    assert np.allclose(pool_columns(matrix), matrix.mean(axis=0), atol=1e-12)
    with pytest.raises(ValueError):
        pool_columns(np.empty((0, 4)))


def test_injected_model_instance_used():
    model = ConstantModel(4, value=-3.0)
    cfg = EmbedderConfig(model="ignored-when-instance-given")
    vec = embed_document("Text.", cfg, model=model)
    assert np.array_equal(vec, np.full(4, -3.0))


def test_embed_corpus_csv_to_jsonl(tmp_path):
    src = tmp_path / "articles.csv"
    write_articles_csv(src, [article(i) for i in range(3)])
    out = tmp_path / "corpus.jsonl"
    count = embed_corpus(src, EmbedderConfig(model="hash:16", output_format="jsonl"), out)
    assert count == 3
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 3
    dims = {len(r["embedding"]) for r in records}
    assert dims == {16}
    assert records[0]["id"] == 1000
    assert records[0]["domain"] == "example.test"


def test_embed_corpus_jsonl_input(tmp_path):
    src = tmp_path / "articles.jsonl"
    with src.open("w") as handle:
        for i in range(2):
            handle.write(json.dumps(article(i)) + "\n")
    out = tmp_path / "corpus.ftme"
    count = embed_corpus(src, EmbedderConfig(model="hash:8"), out)
    assert count == 2
    assert out.read_bytes()[:4] == b"FTME"


def test_row_missing_raw_text_reports_id(tmp_path):
    src = tmp_path / "articles.csv"
    rows = [article(0), dict(article(1), raw_text="")]
    write_articles_csv(src, rows)
    with pytest.raises(ValueError, match="1001"):
        embed_corpus(src, EmbedderConfig(model="hash:8"), tmp_path / "out.ftme")


def test_missing_required_columns(tmp_path):
    src = tmp_path / "articles.csv"
    with src.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=["id", "title"])
        writer.writeheader()
        writer.writerow({"id": "1", "title": "t"})
    with pytest.raises(ValueError, match="raw_text"):
        embed_corpus(src, EmbedderConfig(model="hash:8"), tmp_path / "out.ftme")


def test_empty_corpus_rejected(tmp_path):
    src = tmp_path / "articles.csv"
    write_articles_csv(src, [])
    with pytest.raises(ValueError, match="no articles"):
        embed_corpus(src, EmbedderConfig(model="hash:8"), tmp_path / "out.ftme")


def test_missing_input_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        embed_corpus(
            tmp_path / "absent.csv", EmbedderConfig(model="hash:8"), tmp_path / "o"
        )


def test_dimension_constant_across_corpus(tmp_path):
    src = tmp_path / "articles.csv"
    write_articles_csv(src, [article(i, text="Short. " * (i + 1)) for i in range(5)])
    out = tmp_path / "corpus.jsonl"
    embed_corpus(src, EmbedderConfig(model="hash:24", output_format="jsonl"), out)
    dims = {
        len(json.loads(line)["embedding"]) for line in out.read_text().splitlines()
    }
    assert dims == {24}


def test_config_validation():
    with pytest.raises(ValueError):
        EmbedderConfig(model="hash:8", output_format="parquet")
    with pytest.raises(ValueError):
        EmbedderConfig(model="hash:8", max_sentence_tokens=0)
    with pytest.raises(ValueError):
        EmbedderConfig(model="hash:8", device="tpu")


def test_hashing_model_rows_differ_by_content():
    model = HashingModel(32)
    rows = model.sentence_vectors(["alpha beta", "gamma delta"])
    assert not np.allclose(rows[0], rows[1])
