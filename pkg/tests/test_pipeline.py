from __future__ import annotations

import pytest

from relsent.corpus import Review
from relsent.features import HyperParams
from relsent.iob2 import Span
from relsent.pipeline import (TrainSettings, cross_validate, evaluate_relations, evaluate_sentiment,
                              evaluate_terms, format_report, run_pipeline, to_jsonable)
from relsent.synthetic import labelled_corpus, load_synthetic, templated_corpus


def test_bundled_corpus_matches_generator():
    corpus = load_synthetic()
    assert corpus == templated_corpus()
    assert len(corpus) == 30
    labels = {o.sentiment for r in corpus for o in r.opinions}
    assert labels == {"positive", "neutral", "negative", "unknown"}
    assert corpus[0].tokens[:5] == "the battery life is great".split()
    assert any(len(r.relations) < len(r.aspects) * len(r.opinions) for r in corpus)


def test_labelled_corpus_frequency():
    c = labelled_corpus(1000, 0.647, seed=3)
    labels = [o.sentiment for r in c for o in r.opinions]
    assert len(labels) == 1000 and labels.count("positive") == 647


def test_gold_against_gold_scores_one(synthetic):
    terms = evaluate_terms(synthetic, synthetic)
    assert terms["aspects"].f1 == terms["opinions"].f1 == 1.0
    assert evaluate_sentiment(synthetic, synthetic)["model"].accuracy == 1.0
    assert evaluate_relations(synthetic, synthetic).f1 == 1.0


def test_report_layout(synthetic):
    report = {**evaluate_terms(synthetic, synthetic), **evaluate_sentiment(synthetic, synthetic),
              "relations": evaluate_relations(synthetic, synthetic)}
    text = format_report(to_jsonable(report))
    for heading in ("Role", "Aspects", "Opinions", "Accuracy", "#Correct", "#Incorrect", "Relations"):
        assert heading in text


class _Spy:
    def __init__(self, result=None):
        self.calls = 0
        self.result = result

    def extract(self, review):
        self.calls += 1
        return self.result


def test_nothing_found_means_no_downstream_calls():
    class Boom:
        threshold = 0.5

        def label_opinions(self, *a):
            raise AssertionError("sentiment stage should not run")

    terms = _Spy(([], []))
    r = Review("e", ["hello"], ["UH"])
    (out,) = run_pipeline(terms, Boom(), Boom(), [r])
    assert terms.calls == 1
    assert (out.aspects, out.opinions, out.relations) == ([], [], [])


def test_sentiment_sees_stage_one_opinions():
    seen = []

    class Sentiment:
        def label_opinions(self, review, opinions):
            seen.append(list(opinions))
            return [o.with_sentiment("neutral") for o in opinions]

    predicted = [Span(0, 1, "opinion")]
    terms = _Spy(([], predicted))
    r = Review("e", ["fine", "."], ["JJ", "."], [], [Span(1, 2, "opinion", "positive")])
    (out,) = run_pipeline(terms, Sentiment(), None, [r])
    assert seen == [predicted]
    assert out.opinions[0].sentiment == "neutral"


def test_cross_validation_report(synthetic):
    settings = TrainSettings(epochs={"terms": 1, "sentiment": 1, "relations": 1}, hp=HyperParams.tiny())
    report = cross_validate(synthetic[:10], k=2, seed=0, settings=settings)
    assert report["fold_sizes"] == [5, 5]
    for key in ("aspects", "opinions", "relations"):
        assert set(report[key]) == {"precision", "recall", "f1"}
    assert 0.0 <= report["model"]["accuracy"] <= 1.0
    assert report["distance_filter_recall"] == 1.0
    again = cross_validate(synthetic[:10], k=2, seed=0, settings=settings)
    assert again == report


def test_cross_validation_single_stage(synthetic):
    settings = TrainSettings(epochs={"terms": 1, "sentiment": 1, "relations": 1}, hp=HyperParams.tiny())
    report = cross_validate(synthetic[:6], k=3, stages=["sentiment"], settings=settings)
    assert "model" in report and "aspects" not in report
    with pytest.raises(ValueError):
        cross_validate(synthetic[:6], k=3, stages=["bogus"], settings=settings)
