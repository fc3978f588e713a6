from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relsent.corpus import Review
from relsent.errors import DataError
from relsent.features import HyperParams, Vocabulary
from relsent.gradcheck import check_model
from relsent.iob2 import Span, check_spans
from relsent.tagger import (TAGGER_KINDS, TaggerModel, TermExtractor, predict_corpus, train_tagger,
                            train_term_extractor)

TINY = HyperParams.tiny()


def _model(kind="stacked", seed=0, **kw):
    vocab = Vocabulary(["the", "battery", "life", "is", "great"])
    return TaggerModel.create(kind, TINY, vocab, np.random.default_rng(seed), **kw)


def _zero_heads(model):
    for head in model.heads:
        head.weight.value[...] = 0.0
        head.bias.value[...] = 0.0


@pytest.mark.parametrize("kind", TAGGER_KINDS)
def test_zeroed_head_predicts_all_outside(kind):
    m = _model(kind)
    _zero_heads(m)
    tokens = "the battery life is great".split()
    for tags in m.tag_sequence(tokens, ["DT", "NN", "NN", "VBZ", "JJ"]):
        assert tags == ["O"] * 5


def test_empty_and_single_token_inputs():
    m = _model("joint")
    assert m.tag_sequence([], []) == [[], []]
    assert [len(t) for t in m.tag_sequence(["great"], ["JJ"])] == [1, 1]


@pytest.mark.parametrize("kind", TAGGER_KINDS)
def test_probability_rows_sum_to_one(kind):
    m = _model(kind)
    words, pos = m.encode_inputs("the battery is great".split(), ["DT", "NN", "VBZ", "JJ"])
    probs, _ = m.forward(words, pos)
    assert len(probs) == (2 if kind.startswith("joint") else 1)
    for p in probs:
        assert p.shape == (4, 3)
        assert np.all(np.abs(p.sum(axis=1) - 1) <= 1e-9)


def test_layer_stacks():
    assert _model("cnn").layer_sizes() == [4, 3, 3, 3, 3]
    assert _model("rnn").layer_sizes() == [4, 4, 3]
    assert _model("stacked").layer_sizes() == [4 + 46, 3, 3, 3, 4, 3]
    assert _model("joint-large").layer_sizes() == [50, 6, 6, 6, 8, 3]


def test_pos_default_and_override():
    assert _model("stacked").use_pos and _model("joint").use_pos
    assert not _model("cnn").use_pos and not _model("rnn").use_pos
    assert not _model("stacked", use_pos=False).use_pos


@pytest.mark.parametrize("kind", ["cnn", "rnn", "stacked", "joint"])
def test_full_model_gradient_check(kind):
    assert max(check_model(kind).values()) <= 1e-4


def test_joint_with_zero_opinion_weight_matches_single_tagger():
    joint = _model("joint", seed=3)
    joint.head_weights = (1.0, 0.0)
    single = _model("stacked", seed=4, role="aspect")
    jp = {p.name: p for p in joint.parameters()}
    for p in single.parameters():
        p.value[...] = jp[p.name].value
    review = Review("r", "the battery life is great".split(), ["DT", "NN", "NN", "VBZ", "JJ"],
                    [Span(1, 3)], [Span(4, 5, "opinion", "positive")])
    lj = joint.loss(review, train=True, rng=np.random.default_rng(7), backward=True)
    ls = single.loss(review, train=True, rng=np.random.default_rng(7), backward=True)
    assert abs(lj - ls) <= 1e-10
    for p in single.parameters():
        assert np.abs(p.grad - jp[p.name].grad).max() <= 1e-10, p.name
    assert not jp["out_opinion.weight"].grad.any()


def test_epochs_zero_returns_initialisation(synthetic):
    m = train_tagger(synthetic[:3], "stacked", epochs=0, seed=5, hp=TINY)
    fresh = train_tagger(synthetic[:3], "stacked", epochs=0, seed=5, hp=TINY)
    assert m.loss_history == []
    for a, b in zip(m.parameters(), fresh.parameters()):
        assert np.array_equal(a.value, b.value)


def test_training_is_deterministic(synthetic):
    a = train_tagger(synthetic[:5], "joint", epochs=3, seed=2, hp=TINY)
    b = train_tagger(synthetic[:5], "joint", epochs=3, seed=2, hp=TINY)
    assert a.loss_history == b.loss_history
    c = train_tagger(synthetic[:5], "joint", epochs=3, seed=3, hp=TINY)
    assert a.loss_history != c.loss_history


@pytest.mark.parametrize("kind", TAGGER_KINDS)
def test_single_review_loss_decreases(synthetic, kind):
    # dropout off so the per-epoch loss measures the optimiser, not mask noise
    m = train_tagger(synthetic[:1], kind, epochs=50, seed=0, hp=HyperParams(dropout=0.0))
    h = np.array(m.loss_history)
    assert len(h) == 50
    assert np.all(h[1:] <= h[:-1] * 1.05)
    assert h[-1] < 0.5 * h[0]


def test_empty_corpus_rejected():
    with pytest.raises(DataError):
        train_tagger([], "cnn")


def test_predict_corpus_edge_cases():
    m = _model("cnn")
    assert predict_corpus(m, []) == []
    _zero_heads(m)
    assert predict_corpus(m, [Review("r", ["great"], ["JJ"])]) == [[]]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 12), st.sampled_from(TAGGER_KINDS))
def test_predictions_are_always_valid_spans(seed, n, kind):
    m = _model(kind, seed=seed)
    for p in m.parameters():
        p.value[...] = np.random.default_rng(seed).normal(0, 2.0, size=p.shape)
    review = Review("r", ["w"] * n, ["NN"] * n)
    spans = m.predict(review)
    for role in ("aspect", "opinion"):
        check_spans([s for s in spans if s.role == role], n)


def test_term_extractor_roles(synthetic):
    sep = train_term_extractor(synthetic[:2], "cnn", epochs=1, hp=TINY)
    assert [m.roles for m in sep.models] == [("aspect",), ("opinion",)]
    joint = train_term_extractor(synthetic[:2], "joint", epochs=1, hp=TINY)
    assert joint.joint and joint.models[0].roles == ("aspect", "opinion")
    aspects, opinions = joint.extract(synthetic[0])
    assert all(s.role == "aspect" for s in aspects) and all(s.role == "opinion" for s in opinions)
    with pytest.raises(ValueError):
        TermExtractor([sep.models[0]])
