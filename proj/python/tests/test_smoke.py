import math
import os

import numpy as np
import pytest

import codeattn

CORPUS = os.environ.get("CODEATTN_TOY_CORPUS")


def test_lex_types():
    tokens = codeattn.lex("public int x = 1 ;")
    assert [t[1] for t in tokens] == ["modifier", "basic-type", "identifier", "operator", "decimal-integer", "separator"]
    assert tokens[2][:1] == ("x",)


def test_strip_comments_keeps_strings():
    assert "keep" not in codeattn.strip_comments("int a; // keep\n")
    assert '"// no"' in codeattn.strip_comments('String s = "// no";')


def test_jensen_shannon_spot_value():
    assert codeattn.jensen_shannon([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.311278, abs=1e-6)
    assert codeattn.jensen_shannon([0.2, 0.8], [0.2, 0.8]) == 0.0


def test_encoder_rows_are_stochastic(tmp_path):
    enc = codeattn.Encoder.random(layers=2, heads=2, hidden=16, vocab_size=30, max_len=20, seed=3)
    out = enc.encode([2, 7, 8, 9, 3])
    att = out["attention"]
    assert att.shape == (2, 2, 5, 5)
    np.testing.assert_allclose(att.sum(axis=-1), 1.0, atol=1e-9)
    assert len(out["hidden_states"]) == 3
    assert out["pooled"].shape == (16,)

    path = tmp_path / "e.ckpt"
    enc.save(path)
    back = codeattn.Encoder.load(path)
    assert back.checksum == enc.checksum
    assert back.config == enc.config


def test_bad_ids_raise():
    enc = codeattn.Encoder.random(layers=1, heads=1, hidden=4, vocab_size=10, max_len=8)
    with pytest.raises(ValueError):
        enc.encode([2, 99, 3])


@pytest.mark.skipif(CORPUS is None, reason="toy corpus location not set")
def test_vocab_frames_source():
    vocab = codeattn.Vocab.train(CORPUS, 500)
    assert len(vocab) > 5
    ids, segments = vocab.encode_source("int getValue() { return value; }", 64)
    assert ids[0] == vocab.id("[CLS]") and ids[-1] == vocab.id("[SEP]")
    assert set(segments) == {0}
    enc = codeattn.Encoder.random(layers=1, heads=2, hidden=8, vocab_size=len(vocab), max_len=64)
    att = enc.encode(ids)["attention"]
    assert math.isclose(float(att[0, 0].sum()), len(ids), rel_tol=1e-9)
