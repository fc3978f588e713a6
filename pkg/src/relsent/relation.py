"""Binary aspect-opinion relation classification.

Each candidate pair is encoded over a window of ``l_rel`` tokens centred
between the two terms: word embedding, POS one-hot, distance-to-aspect
embedding and distance-to-opinion embedding. A GRU, a maxout layer and a
single maxout unit with a sigmoid give the relation probability.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import Review
from .errors import DataError
from .features import (DistanceIndexer, HyperParams, InputEncoder, Vocabulary, WindowFeatures,
                       random_embeddings, window_features)
from .iob2 import Span
from .nn import (GRU, Maxout, Parameter, RmsPropConfig, assign_parameters,
                 binary_cross_entropy_loss, embedding_uniform, fit, sigmoid)

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class CandidatePair:
    aspect_index: int
    opinion_index: int
    aspect: Span
    opinion: Span
    gap: int


def span_gap(a: Span, b: Span) -> int:
    """Tokens strictly between the nearer ends; 0 when adjacent or overlapping."""
    return max(0, max(a.start, b.start) - min(a.end, b.end))


def generate_candidates(aspects: Sequence[Span], opinions: Sequence[Span],
                        max_gap: int = 20) -> list[CandidatePair]:
    """All aspect x opinion pairs at most ``max_gap`` words apart."""
    out = []
    for i, a in enumerate(aspects):
        for j, o in enumerate(opinions):
            g = span_gap(a, o)
            if g <= max_gap:
                out.append(CandidatePair(i, j, a, o, g))
    return out


def filter_recall(corpus: Sequence[Review], max_gap: int = 20) -> tuple[int, int]:
    """``(kept, total)`` gold relations surviving the distance filter."""
    kept = total = 0
    for r in corpus:
        for a, o in r.relations:
            total += 1
            kept += span_gap(r.aspects[a], r.opinions[o]) <= max_gap
    return kept, total


class RelationModel:
    BUNDLE_KIND = "relation"

    def __init__(self, hp: HyperParams, vocab: Vocabulary, encoder: InputEncoder, gru: GRU,
                 hidden: Maxout, output: Maxout, threshold: float = DEFAULT_THRESHOLD):
        self.hp = hp
        self.vocab = vocab
        self.indexer = DistanceIndexer(hp.max_distance)
        self.encoder = encoder
        self.gru = gru
        self.hidden = hidden
        self.output = output
        self.threshold = threshold
        self.loss_history: list[float] = []
        self.training_stats: dict[str, int] = {}

    @classmethod
    def create(cls, hp: HyperParams, vocab: Vocabulary, rng: np.random.Generator,
               word_table: Optional[Parameter] = None) -> RelationModel:
        if word_table is None:
            word_table = random_embeddings(vocab, hp.d_word, rng)
        else:
            word_table = Parameter(word_table.name, word_table.value)
        indexer = DistanceIndexer(hp.max_distance)
        tables = [Parameter(f"{role}_distance", embedding_uniform(rng, indexer.table_size, hp.d_dist))
                  for role in ("aspect", "opinion")]
        encoder = InputEncoder(word_table, use_pos=True, distance_tables=tables)
        gru = GRU.create("gru", encoder.width, hp.d_gru, rng)
        hidden = Maxout.create("maxout_hidden", hp.d_gru, hp.d_rel, rng, hp.maxout_pieces)
        output = Maxout.create("maxout_out", hp.d_rel, 1, rng, hp.maxout_pieces)
        return cls(hp, vocab, encoder, gru, hidden, output)

    def parameters(self) -> list[Parameter]:
        return (self.encoder.parameters() + self.gru.parameters()
                + self.hidden.parameters() + self.output.parameters())

    def layer_sizes(self) -> list[int]:
        return [self.encoder.width, self.gru.hidden, self.hidden.d_out, self.output.d_out]

    def features(self, tokens: Sequence[str], pos: Sequence[str], aspect: Span,
                 opinion: Span) -> WindowFeatures:
        return window_features(tokens, pos, [aspect, opinion], self.hp.l_rel, self.vocab, self.indexer)

    def forward(self, feats: WindowFeatures):
        x, ecache = self.encoder.forward(feats.words, feats.pos, feats.distances)
        states, gcache = self.gru.forward(x)
        h, hcache = self.hidden.forward(states[-1:])
        logit, ocache = self.output.forward(h)
        return float(sigmoid(logit[0, 0])), (ecache, gcache, states.shape, hcache, ocache)

    def backward(self, dlogit: float, cache) -> None:
        ecache, gcache, shape, hcache, ocache = cache
        dh = self.output.backward(np.array([[dlogit]]), ocache)
        dfinal = self.hidden.backward(dh, hcache)
        dstates = np.zeros(shape)
        dstates[-1] = dfinal[0]
        self.encoder.backward(self.gru.backward(dstates, gcache), ecache)

    def loss(self, feats: WindowFeatures, label: int, backward: bool = False) -> float:
        p, cache = self.forward(feats)
        loss, dlogit = binary_cross_entropy_loss(p, label)
        if backward:
            self.backward(dlogit, cache)
        return loss

    def probability(self, tokens: Sequence[str], pos: Sequence[str], aspect: Span, opinion: Span) -> float:
        return self.forward(self.features(tokens, pos, aspect, opinion))[0]

    def state(self) -> tuple[dict, dict[str, np.ndarray]]:
        meta = {"hyperparams": self.hp.to_dict(), "vocabulary": list(self.vocab.words),
                "threshold": self.threshold}
        return meta, {p.name: p.value for p in self.parameters()}

    @classmethod
    def from_state(cls, meta: dict, arrays: dict[str, np.ndarray]) -> RelationModel:
        hp = HyperParams.from_dict(meta["hyperparams"])
        model = cls.create(hp, Vocabulary.from_list(meta["vocabulary"]), np.random.default_rng(0))
        model.threshold = float(meta["threshold"])
        assign_parameters(model.parameters(), arrays)
        return model


def classify_pair(model: RelationModel, review: Review, pair: CandidatePair) -> float:
    return model.probability(review.tokens, review.pos, pair.aspect, pair.opinion)


def training_samples(corpus: Sequence[Review], max_gap: int = 20):
    """Labelled candidates from gold spans, plus counts for reporting."""
    samples: list[tuple[Review, CandidatePair, int]] = []
    stats = {"gold_relations": 0, "unreachable": 0, "positives": 0, "negatives": 0}
    for r in corpus:
        gold = set(r.relations)
        cands = generate_candidates(r.aspects, r.opinions, max_gap)
        reachable = {(c.aspect_index, c.opinion_index) for c in cands}
        stats["gold_relations"] += len(gold)
        stats["unreachable"] += len(gold - reachable)
        for c in cands:
            label = int((c.aspect_index, c.opinion_index) in gold)
            samples.append((r, c, label))
            stats["positives" if label else "negatives"] += 1
    return samples, stats


def train_relation(corpus: Sequence[Review], epochs: int = 28, seed: int = 0,
                   hp: Optional[HyperParams] = None, vocab: Optional[Vocabulary] = None,
                   word_table: Optional[Parameter] = None,
                   rms: Optional[RmsPropConfig] = None) -> RelationModel:
    """One-sample binary cross-entropy training over all filtered gold-span
    candidates; gold relations removed by the distance filter are counted
    in ``model.training_stats["unreachable"]``."""
    hp = hp or HyperParams()
    rng = np.random.default_rng(seed)
    if vocab is None:
        vocab = Vocabulary.from_tokens(r.tokens for r in corpus)
    model = RelationModel.create(hp, vocab, rng, word_table)
    raw, stats = training_samples(corpus, hp.max_distance)
    if stats["unreachable"]:
        log.warning("%d of %d gold relations exceed the %d-word distance filter",
                    stats["unreachable"], stats["gold_relations"], hp.max_distance)
    if not raw and epochs:
        raise DataError("no candidate pairs to train on")
    samples = [(model.features(r.tokens, r.pos, c.aspect, c.opinion), y) for r, c, y in raw]
    model.training_stats = stats
    model.loss_history = fit(model, samples, epochs, rng, rms,
                             lambda s: model.loss(s[0], s[1], backward=True), "relation")
    return model


def extract_relations(model: RelationModel, corpus: Sequence[Review],
                      threshold: Optional[float] = None) -> list[list[tuple[int, int]]]:
    """Predicted ``(aspect index, opinion index)`` pairs per review, using the
    review's current spans. A pair is kept when its probability exceeds the
    threshold strictly."""
    thr = model.threshold if threshold is None else threshold
    out = []
    for r in corpus:
        pairs = []
        for c in generate_candidates(r.aspects, r.opinions, model.hp.max_distance):
            if classify_pair(model, r, c) > thr:
                pairs.append((c.aspect_index, c.opinion_index))
        out.append(pairs)
    return out
