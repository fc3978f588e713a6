"""Finite-difference checks of whole models on tiny seeded instances."""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np

from .corpus import Review
from .features import HyperParams, Vocabulary
from .iob2 import Span
from .nn import Parameter, gradient_check_report
from .relation import RelationModel
from .sentiment import SentimentModel
from .tagger import TAGGER_KINDS, TaggerModel

MODEL_KINDS = TAGGER_KINDS + ("sentiment", "relation")
TOLERANCE = 1e-4

TINY_REVIEW = Review(
    "tiny",
    ["the", "battery", "life", "is", "great"],
    ["DT", "NN", "NN", "VBZ", "JJ"],
    aspects=[Span(1, 3, "aspect")],
    opinions=[Span(4, 5, "opinion", "positive")],
    relations=[(0, 0)],
)


def tiny_instance(kind: str, seed: int = 0) -> tuple[list[Parameter], Callable[[bool], float]]:
    """Parameters and a deterministic loss closure for a small model of ``kind``.

    The input is a five-token review; classifier windows are six wide so the
    padding path is exercised too. All parameters are redrawn from
    N(0, 0.5^2): at the usual small initial scale several gradients are
    ~1e-9, where finite-difference round-off swamps the comparison.
    """
    rng = np.random.default_rng(seed)
    hp = HyperParams.tiny()
    review = TINY_REVIEW
    vocab = Vocabulary(review.tokens[:-1])  # last word maps to <UNK>
    if kind in TAGGER_KINDS:
        model = TaggerModel.create(kind, hp, vocab, rng)
        closure = lambda backward: model.loss(review, backward=backward)  # noqa: E731
    elif kind == "sentiment":
        model = SentimentModel.create(hp, vocab, rng)
        feats = model.features(review.tokens, review.pos, review.opinions[0])
        closure = lambda backward: model.loss(feats, "neutral", backward=backward)  # noqa: E731
    elif kind == "relation":
        model = RelationModel.create(hp, vocab, rng)
        feats = model.features(review.tokens, review.pos, review.aspects[0], review.opinions[0])
        closure = lambda backward: model.loss(feats, 1, backward=backward)  # noqa: E731
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    params = model.parameters()
    for p in params:
        p.value[...] = rng.normal(0.0, 0.5, size=p.shape)
    return params, closure


def check_model(kind: str, seed: int = 0, plant_bug: bool = False,
                epsilon: float = 1e-5) -> dict[str, float]:
    """Max relative error per parameter. ``plant_bug`` doubles every analytic
    gradient, which the check must catch."""
    params, closure = tiny_instance(kind, seed)
    if plant_bug:
        inner = closure

        def closure(backward: bool) -> float:
            loss = inner(backward)
            if backward:
                for p in params:
                    p.grad *= 2.0
            return loss

    # the large redrawn weights saturate some softmax rows; the clamp flag is noise here
    nn_log = logging.getLogger("relsent.nn")
    level = nn_log.level
    nn_log.setLevel(logging.ERROR)
    try:
        return gradient_check_report(closure, params, epsilon)
    finally:
        nn_log.setLevel(level)
