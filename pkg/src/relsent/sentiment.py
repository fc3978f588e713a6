"""Sentiment of individual opinion terms.

A window of ``l_pol`` tokens around the opinion term is encoded as word
embedding + POS one-hot + a learned embedding of each token's distance to
the term. A GRU reads the window; its final state passes through a maxout
layer and a maxout output layer with a softmax over the four labels.
Other opinion terms in the same text play no part in the features.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .corpus import Review
from .errors import DataError
from .features import (DistanceIndexer, HyperParams, InputEncoder, Vocabulary, WindowFeatures,
                       random_embeddings, window_features)
from .iob2 import SENTIMENTS, Span
from .nn import (GRU, Maxout, Parameter, RmsPropConfig, assign_parameters, cross_entropy_loss,
                 embedding_uniform, fit, softmax)

LABELS = SENTIMENTS  # output order; argmax ties resolve in this order


class SentimentModel:
    BUNDLE_KIND = "sentiment"

    def __init__(self, hp: HyperParams, vocab: Vocabulary, encoder: InputEncoder, gru: GRU,
                 hidden: Maxout, output: Maxout):
        self.hp = hp
        self.vocab = vocab
        self.indexer = DistanceIndexer(hp.max_distance)
        self.encoder = encoder
        self.gru = gru
        self.hidden = hidden
        self.output = output
        self.loss_history: list[float] = []

    @classmethod
    def create(cls, hp: HyperParams, vocab: Vocabulary, rng: np.random.Generator,
               word_table: Optional[Parameter] = None) -> SentimentModel:
        if word_table is None:
            word_table = random_embeddings(vocab, hp.d_word, rng)
        else:
            word_table = Parameter(word_table.name, word_table.value)
        indexer = DistanceIndexer(hp.max_distance)
        dist = Parameter("opinion_distance", embedding_uniform(rng, indexer.table_size, hp.d_dist))
        encoder = InputEncoder(word_table, use_pos=True, distance_tables=[dist])
        gru = GRU.create("gru", encoder.width, hp.d_gru, rng)
        hidden = Maxout.create("maxout_hidden", hp.d_gru, hp.d_pol, rng, hp.maxout_pieces)
        output = Maxout.create("maxout_out", hp.d_pol, len(LABELS), rng, hp.maxout_pieces)
        return cls(hp, vocab, encoder, gru, hidden, output)

    def parameters(self) -> list[Parameter]:
        return (self.encoder.parameters() + self.gru.parameters()
                + self.hidden.parameters() + self.output.parameters())

    def layer_sizes(self) -> list[int]:
        return [self.encoder.width, self.gru.hidden, self.hidden.d_out, self.output.d_out]

    def features(self, tokens: Sequence[str], pos: Sequence[str], opinion: Span) -> WindowFeatures:
        return window_features(tokens, pos, [opinion], self.hp.l_pol, self.vocab, self.indexer)

    def forward(self, feats: WindowFeatures):
        x, ecache = self.encoder.forward(feats.words, feats.pos, feats.distances)
        states, gcache = self.gru.forward(x)
        final = states[-1:]
        h, hcache = self.hidden.forward(final)
        logits, ocache = self.output.forward(h)
        probs = softmax(logits)[0]
        return probs, (ecache, gcache, states.shape, hcache, ocache)

    def backward(self, dlogits: np.ndarray, cache) -> None:
        ecache, gcache, shape, hcache, ocache = cache
        dh = self.output.backward(dlogits.reshape(1, -1), ocache)
        dfinal = self.hidden.backward(dh, hcache)
        dstates = np.zeros(shape)
        dstates[-1] = dfinal[0]
        dx = self.gru.backward(dstates, gcache)
        self.encoder.backward(dx, ecache)

    def loss(self, feats: WindowFeatures, label: str, backward: bool = False) -> float:
        probs, cache = self.forward(feats)
        loss, dlogits = cross_entropy_loss(probs[None], [LABELS.index(label)])
        if backward:
            self.backward(dlogits[0], cache)
        return loss

    def classify(self, tokens: Sequence[str], pos: Sequence[str], opinion: Span) -> tuple[str, np.ndarray]:
        probs, _ = self.forward(self.features(tokens, pos, opinion))
        return LABELS[int(np.argmax(probs))], probs

    def label_opinions(self, review: Review, opinions: Optional[Sequence[Span]] = None) -> list[Span]:
        """Copies of ``opinions`` (default: the review's own) with predicted sentiment."""
        if opinions is None:
            opinions = review.opinions
        return [o.with_sentiment(self.classify(review.tokens, review.pos, o)[0]) for o in opinions]

    def state(self) -> tuple[dict, dict[str, np.ndarray]]:
        meta = {"hyperparams": self.hp.to_dict(), "vocabulary": list(self.vocab.words)}
        return meta, {p.name: p.value for p in self.parameters()}

    @classmethod
    def from_state(cls, meta: dict, arrays: dict[str, np.ndarray]) -> SentimentModel:
        hp = HyperParams.from_dict(meta["hyperparams"])
        model = cls.create(hp, Vocabulary.from_list(meta["vocabulary"]), np.random.default_rng(0))
        assign_parameters(model.parameters(), arrays)
        return model


def classify_opinion(model: SentimentModel, review: Review, opinion: Span) -> tuple[str, np.ndarray]:
    return model.classify(review.tokens, review.pos, opinion)


def training_pairs(corpus: Sequence[Review]) -> list[tuple[Review, Span]]:
    pairs = []
    for r in corpus:
        for o in r.opinions:
            if o.sentiment is None:
                raise DataError(f"review {r.id!r}: opinion [{o.start}, {o.end}) has no sentiment label")
            pairs.append((r, o))
    return pairs


def train_sentiment(corpus: Sequence[Review], epochs: int = 14, seed: int = 0,
                    hp: Optional[HyperParams] = None, vocab: Optional[Vocabulary] = None,
                    word_table: Optional[Parameter] = None,
                    rms: Optional[RmsPropConfig] = None) -> SentimentModel:
    """One-sample cross-entropy training over every gold (review, opinion) pair."""
    hp = hp or HyperParams()
    rng = np.random.default_rng(seed)
    if vocab is None:
        vocab = Vocabulary.from_tokens(r.tokens for r in corpus)
    model = SentimentModel.create(hp, vocab, rng, word_table)
    samples = [(model.features(r.tokens, r.pos, o), o.sentiment) for r, o in training_pairs(corpus)]
    if not samples and epochs:
        raise DataError("no labelled opinions to train on")
    model.loss_history = fit(model, samples, epochs, rng, rms,
                             lambda s: model.loss(s[0], s[1], backward=True), "sentiment")
    return model


def majority_baseline(corpus: Sequence[Review]) -> list[str]:
    """The "positive only" baseline: one ``positive`` per opinion term."""
    return ["positive" for r in corpus for _ in r.opinions]


def gold_labels(corpus: Sequence[Review]) -> list[str]:
    return [o.sentiment for r in corpus for o in r.opinions]


def predict_labels(model: SentimentModel, corpus: Sequence[Review]) -> list[str]:
    return [s.sentiment for r in corpus for s in model.label_opinions(r)]
