from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relsent.errors import DataError
from relsent.features import (PAD, POS_PAD_INDEX, POS_TAGS, UNK, DistanceIndexer, HyperParams,
                              InputEncoder, Vocabulary, extract_window, load_embeddings, pos_index,
                              random_embeddings, relative_distances, window_features)
from relsent.iob2 import Span
from relsent.nn import Parameter


def test_distances_single_span():
    assert relative_distances(8, Span(1, 3)) == [-1, 0, 0, 1, 2, 3, 4, 5]


def test_distances_aspect_and_opinion_rows():
    assert relative_distances(7, Span(4, 6)) == [-4, -3, -2, -1, 0, 0, 1]
    assert relative_distances(7, Span(1, 2)) == [-1, 0, 1, 2, 3, 4, 5]


def test_distances_whole_sequence():
    assert relative_distances(5, Span(0, 5)) == [0] * 5


def test_distances_out_of_range():
    with pytest.raises(DataError):
        relative_distances(3, Span(1, 4))


@given(st.integers(1, 40).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, n - 1)).flatmap(
        lambda t: st.tuples(st.just(t[0]), st.just(t[1]), st.integers(t[1] + 1, t[0])))))
def test_distances_grow_by_one_away_from_span(case):
    n, s, e = case
    d = relative_distances(n, Span(s, e))
    for k in range(1, s + 1):
        assert d[s - k] == -k
    for k in range(1, n - e + 1):
        assert d[e - 1 + k] == k


def test_distance_indexer():
    ix = DistanceIndexer(20)
    assert ix.table_size == 42 and ix.pad_index == 41
    assert ix.encode([-100, -20, 0, 20, 100]) == [0, 0, 20, 40, 40]


@given(st.integers(-10**9, 10**9))
def test_distance_indexer_range(d):
    assert 0 <= DistanceIndexer().index(d) <= 40


def test_window_short_text_is_left_padded():
    assert extract_window(8, [Span(2, 3)], 20) == (range(0, 8), 12)


def test_window_centered():
    assert extract_window(100, [Span(50, 51)], 20) == (range(40, 60), 0)


def test_window_shifted_at_edges():
    assert extract_window(100, [Span(1, 2)], 20) == (range(0, 20), 0)
    assert extract_window(100, [Span(98, 100)], 20) == (range(80, 100), 0)


def test_window_pair_centered_on_midpoint():
    # centres 10 and 30 -> midpoint 20 -> [10, 30)
    assert extract_window(100, [Span(10, 11), Span(30, 31)], 20) == (range(10, 30), 0)


@given(st.integers(1, 80), st.integers(1, 30), st.data())
def test_window_always_fills_width(n, w, data):
    s = data.draw(st.integers(0, n - 1))
    span = Span(s, data.draw(st.integers(s + 1, n)))
    r, pad = extract_window(n, [span], w)
    assert pad + len(r) == w or (n > w and pad == 0 and len(r) == w)
    assert 0 <= r.start and r.stop <= n


def test_window_features_padding():
    vocab = Vocabulary(["the", "food"])
    tokens = ["the", "food", "stays", "fresh"]
    f = window_features(tokens, ["DT", "NN", "VBZ", "JJ"], [Span(2, 4)], 6, vocab, DistanceIndexer())
    assert f.left_pad == 2
    assert f.words == [vocab.pad_index] * 2 + [vocab.index("the"), vocab.index("food"),
                                                 vocab.unk_index, vocab.unk_index]
    assert f.pos[:2] == [POS_PAD_INDEX] * 2 and f.pos[2] == pos_index("DT")
    assert f.distances == [[41, 41, 18, 19, 20, 20]]


def test_pos_tagset():
    assert len(POS_TAGS) == 46
    assert pos_index("NN") != POS_PAD_INDEX
    assert pos_index("NOT-A-TAG") == POS_PAD_INDEX
    assert pos_index("(") == pos_index("-LRB-")


def test_vocabulary_order_and_unknowns():
    v = Vocabulary.from_tokens([["The", "cat"], ["the", "dog"]])
    assert v.pad_index == 0 and v.unk_index == 1
    assert v.index("cat") == 3 and v.index("dog") == 4
    assert v.index("zebra") == v.unk_index
    assert len(v) == 5


def test_random_embeddings_pad_row_zero():
    v = Vocabulary(["a", "b"])
    t = random_embeddings(v, 4, np.random.default_rng(0))
    assert t.shape == (4, 4)
    assert not t.value[v.pad_index].any()
    assert np.abs(t.value).max() <= 0.05


def _write_vectors(path, words, dim, header_dim=None):
    rng = np.random.default_rng(0)
    lines = [f"{len(words)} {header_dim or dim}"]
    for w in words:
        lines.append(w + " " + " ".join(f"{x:.6f}" for x in rng.normal(size=dim)))
    path.write_text("\n".join(lines) + "\n")


def test_load_embeddings_two_words(tmp_path):
    p = tmp_path / "vec.txt"
    _write_vectors(p, ["good", "bad"], 100)
    vocab, table = load_embeddings(p)
    assert len(vocab) == 4 and table.shape == (4, 100)
    assert not table.value[vocab.pad_index].any()
    np.testing.assert_allclose(table.value[vocab.unk_index],
                               table.value[[vocab.index("good"), vocab.index("bad")]].mean(axis=0))
    assert vocab.index("unseen") == vocab.unk_index


def test_load_embeddings_trim_keeps_file_order(tmp_path):
    p = tmp_path / "vec.txt"
    _write_vectors(p, ["good", "bad"], 100)
    vocab, _ = load_embeddings(p, trim_to=1)
    assert len(vocab) == 3 and "good" in vocab and "bad" not in vocab


def test_load_embeddings_lowercases(tmp_path):
    p = tmp_path / "vec.txt"
    _write_vectors(p, ["Good"], 3)
    vocab, _ = load_embeddings(p, dim=3)
    assert "good" in vocab


def test_load_embeddings_dim_mismatch(tmp_path):
    p = tmp_path / "vec.txt"
    _write_vectors(p, ["good"], 50)
    with pytest.raises(DataError):
        load_embeddings(p)


def test_load_embeddings_malformed_line_number(tmp_path):
    p = tmp_path / "vec.txt"
    p.write_text("2 3\ngood 1 2 3\nbad 1 x 3\n")
    with pytest.raises(DataError, match=r"vec\.txt:3:"):
        load_embeddings(p, dim=3)


@pytest.mark.parametrize("use_pos,n_dist,width", [(False, 0, 100), (True, 0, 146), (True, 1, 156),
                                                  (True, 2, 166)])
def test_input_widths(use_pos, n_dist, width):
    hp = HyperParams()
    rng = np.random.default_rng(0)
    table = random_embeddings(Vocabulary(["x"]), hp.d_word, rng)
    dists = [Parameter(f"d{k}", np.zeros((42, hp.d_dist))) for k in range(n_dist)]
    enc = InputEncoder(table, use_pos, dists)
    assert enc.width == width
    x, _ = enc.forward([2, 0], [pos_index("NN"), POS_PAD_INDEX], [[20, 41]] * n_dist)
    assert x.shape == (2, width)


def test_input_encoder_length_mismatch():
    enc = InputEncoder(Parameter("w", np.zeros((3, 2))), True)
    with pytest.raises(Exception):
        enc.forward([0, 1], [0])


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        HyperParams(l_conv=4)
    assert HyperParams.from_dict(HyperParams().to_dict()) == HyperParams()


def test_special_tokens_distinct():
    assert PAD != UNK
