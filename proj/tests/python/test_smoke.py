"""Smoke tests for the python bindings: dataset loading, training on the
tiny fixture, checkpoint round trips, parsing, and the gradient checker."""

import json
import os

import pytest

import clstm

FIXTURES = os.environ.get("CLSTM_FIXTURE_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data", "fixtures"))

TINY_OVERRIDES = {
    "embedding_dim": 6,
    "banks": "2",
    "filters": 4,
    "mem": 5,
    "dropout": 0.2,
    "batch": 4,
    "epochs": 2,
    "seed": 9,
}


def test_parse_sst_tree():
    tree = clstm.parse_sst_tree("(3 (2 It) (4 works))")
    assert tree["label"] == 3
    assert tree["children"][0]["token"] == "It"
    assert clstm.sst_roundtrip("(3 (2 It) (4 works))") == "(3 (2 It) (4 works))"
    with pytest.raises(clstm.ClstmError):
        clstm.parse_sst_tree("(9 nope)")


def test_parse_trec():
    tokens, label = clstm.parse_trec("LOC:other What is the highest waterfall in the United States ?")
    assert label == 4
    assert tokens[0] == "what"


def test_load_dataset():
    data = clstm.load_dataset("sst5", os.path.join(FIXTURES, "sst_tiny"))
    assert data.train_size == 12
    assert data.dev_size == 4
    assert data.test_size == 4
    assert data.num_classes == 5
    assert data.maxlen == 6


def test_gradcheck_passes():
    report = clstm.gradcheck()
    assert report["pass"]
    assert all(err < 1e-4 for err in report["blocks"].values())


def test_gradcheck_mutation_fails_one_block():
    report = clstm.gradcheck(corrupt_block="head.W")
    assert not report["pass"]
    assert report["blocks"]["head.W"] >= 1e-4
    others = {k: v for k, v in report["blocks"].items() if k != "head.W"}
    assert all(err < 1e-4 for err in others.values())


def test_train_evaluate_save_load(tmp_path):
    data = clstm.load_dataset("sst5", os.path.join(FIXTURES, "sst_tiny"))
    model, history = clstm.train(data, TINY_OVERRIDES)
    assert len(history) == 4  # 2 epochs x (train + dev)
    assert all(0.0 <= row["accuracy"] <= 1.0 for row in history)

    result = model.evaluate(data, "test")
    assert 0.0 <= result["accuracy"] <= 1.0
    assert result["examples"] == 4

    path = str(tmp_path / "checkpoint.bin")
    model.save(path)
    back = clstm.load_model(path)
    assert back.evaluate(data, "test") == result
    assert back.config["mem"] == 5


def test_train_determinism():
    data = clstm.load_dataset("trec6", os.path.join(FIXTURES, "trec_tiny"))
    _, h1 = clstm.train(data, dict(TINY_OVERRIDES, epochs=1))
    _, h2 = clstm.train(data, dict(TINY_OVERRIDES, epochs=1))
    strip = lambda rows: [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    assert strip(h1) == strip(h2)


def test_word2vec_roundtrip(tmp_path):
    path = str(tmp_path / "vectors.bin")
    entries = [("what", [0.5, -1.25, 3.0]), ("zzz_not_in_vocab", [9.0, 9.0, 9.0])]
    clstm.write_word2vec(path, entries)
    data = clstm.load_dataset("trec6", os.path.join(FIXTURES, "trec_tiny"))
    vecs = clstm.read_word2vec(path, data)
    assert set(vecs) == {"what"}
    assert vecs["what"] == [0.5, -1.25, 3.0]
