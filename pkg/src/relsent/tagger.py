"""Aspect and opinion term extraction as IOB2 sequence tagging.

Four architectures share one implementation:

``cnn``      embedding -> 3 x (conv, ReLU, dropout) -> softmax
``rnn``      embedding -> GRU -> softmax
``stacked``  embedding -> 3 x (conv, ReLU, dropout) -> GRU -> softmax
``joint``    stacked body with an aspect head and an opinion head
             (``joint-large`` doubles the conv maps and GRU units)
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from .corpus import Review
from .errors import DataError
from .features import HyperParams, InputEncoder, Vocabulary, pos_index, random_embeddings
from .iob2 import ROLES, TAG_INDEX, TAGS, Span, decode, encode, repair
from .nn import (GRU, Conv1D, Dense, Dropout, Parameter, RmsPropConfig, assign_parameters,
                 cross_entropy_loss, fit, softmax)

log = logging.getLogger(__name__)

TAGGER_KINDS = ("cnn", "rnn", "stacked", "joint", "joint-large")
N_CONV = 3
# argmax ties resolve O, then B, then I
_TIE_ORDER = np.array([TAG_INDEX["O"], TAG_INDEX["B"], TAG_INDEX["I"]])


def _priority_argmax(probs: np.ndarray) -> np.ndarray:
    return _TIE_ORDER[np.argmax(probs[:, _TIE_ORDER], axis=1)]


class TaggerModel:
    """One tagger body with one softmax head per predicted role."""

    def __init__(self, kind: str, hp: HyperParams, vocab: Vocabulary, encoder: InputEncoder,
                 convs: Sequence[Conv1D], gru: Optional[GRU], heads: Sequence[Dense],
                 roles: Sequence[str], head_weights: Optional[Sequence[float]] = None):
        if kind not in TAGGER_KINDS:
            raise ValueError(f"unknown tagger kind {kind!r}")
        if len(heads) != len(roles):
            raise ValueError("need exactly one head per role")
        self.kind = kind
        self.hp = hp
        self.vocab = vocab
        self.encoder = encoder
        self.convs = list(convs)
        self.dropout = Dropout(hp.dropout)
        self.gru = gru
        self.heads = list(heads)
        self.roles = tuple(roles)
        self.head_weights = tuple(head_weights) if head_weights is not None else (1.0,) * len(heads)
        self.loss_history: list[float] = []

    @classmethod
    def create(cls, kind: str, hp: HyperParams, vocab: Vocabulary, rng: np.random.Generator,
               use_pos: Optional[bool] = None, role: str = "aspect",
               word_table: Optional[Parameter] = None) -> TaggerModel:
        if kind not in TAGGER_KINDS:
            raise ValueError(f"unknown tagger kind {kind!r}")
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        if use_pos is None:
            use_pos = kind in ("stacked", "joint", "joint-large")
        if word_table is None:
            word_table = random_embeddings(vocab, hp.d_word, rng)
        elif word_table.shape != (len(vocab), hp.d_word):
            raise DataError(f"word table shape {word_table.shape} does not match vocabulary")
        else:
            word_table = Parameter(word_table.name, word_table.value)  # private trainable copy
        encoder = InputEncoder(word_table, use_pos=use_pos)

        scale = 2 if kind == "joint-large" else 1
        d = encoder.width
        convs = []
        if kind != "rnn":
            for k in range(N_CONV):
                conv = Conv1D.create(f"conv{k + 1}", d, hp.d_conv * scale, hp.l_conv, rng)
                convs.append(conv)
                d = conv.d_out
        gru = None
        if kind != "cnn":
            gru = GRU.create("gru", d, hp.d_gru * scale, rng)
            d = gru.hidden
        roles = ROLES if kind.startswith("joint") else (role,)
        heads = [Dense.create(f"out_{r}", d, len(TAGS), rng) for r in roles]
        return cls(kind, hp, vocab, encoder, convs, gru, heads, roles)

    # -- introspection -------------------------------------------------------

    @property
    def use_pos(self) -> bool:
        return self.encoder.use_pos

    def parameters(self) -> list[Parameter]:
        params = self.encoder.parameters()
        for conv in self.convs:
            params += conv.parameters()
        if self.gru is not None:
            params += self.gru.parameters()
        for head in self.heads:
            params += head.parameters()
        return params

    def layer_sizes(self) -> list[int]:
        """Widths from the input features through every hidden layer to the tags."""
        sizes = [self.encoder.width] + [c.d_out for c in self.convs]
        if self.gru is not None:
            sizes.append(self.gru.hidden)
        sizes.append(len(TAGS))
        return sizes

    # -- forward / backward --------------------------------------------------

    def encode_inputs(self, tokens: Sequence[str], pos: Sequence[str]) -> tuple[list[int], list[int]]:
        return self.vocab.encode(tokens), [pos_index(t) for t in pos]

    def forward(self, words: Sequence[int], pos: Sequence[int], train: bool = False,
                rng: Optional[np.random.Generator] = None):
        """Tag probabilities for every head, shape ``(n, 3)`` each."""
        h, ecache = self.encoder.forward(words, pos if self.use_pos else None)
        caches = []
        for conv in self.convs:
            h, ccache = conv.forward(h)
            h, mask = self.dropout.forward(h, rng, train)
            caches.append((ccache, mask))
        gcache = None
        if self.gru is not None:
            h, gcache = self.gru.forward(h)
        probs, hcaches = [], []
        for head in self.heads:
            logits, hc = head.forward(h)
            probs.append(softmax(logits))
            hcaches.append(hc)
        return probs, (ecache, caches, gcache, hcaches)

    def backward(self, dlogits: Sequence[np.ndarray], cache) -> None:
        ecache, caches, gcache, hcaches = cache
        dh = sum(head.backward(d, hc) for head, d, hc in zip(self.heads, dlogits, hcaches))
        if self.gru is not None:
            dh = self.gru.backward(dh, gcache)
        for conv, (ccache, mask) in zip(reversed(self.convs), reversed(caches)):
            dh = self.dropout.backward(dh, mask)
            dh = conv.backward(dh, ccache)
        self.encoder.backward(dh, ecache)

    def targets(self, review: Review) -> list[list[int]]:
        out = []
        for role in self.roles:
            spans = review.aspects if role == "aspect" else review.opinions
            out.append([TAG_INDEX[t] for t in encode(spans, len(review))])
        return out

    def loss(self, review: Review, train: bool = False, rng: Optional[np.random.Generator] = None,
             backward: bool = False) -> float:
        """Weighted sum of per-head cross-entropies; optionally backpropagate."""
        words, pos = self.encode_inputs(review.tokens, review.pos)
        probs, cache = self.forward(words, pos, train, rng)
        total = 0.0
        dlogits = []
        for p, t, w in zip(probs, self.targets(review), self.head_weights):
            l, d = cross_entropy_loss(p, t)
            total += w * l
            dlogits.append(w * d)
        if backward:
            self.backward(dlogits, cache)
        return total

    # -- inference -----------------------------------------------------------

    def tag_sequence(self, tokens: Sequence[str], pos: Sequence[str]) -> list[list[str]]:
        """Repaired IOB2 tags, one sequence per role in :attr:`roles`."""
        if not tokens:
            return [[] for _ in self.roles]
        words, pidx = self.encode_inputs(tokens, pos)
        probs, _ = self.forward(words, pidx)
        return [repair([TAGS[k] for k in _priority_argmax(p)]) for p in probs]

    def predict(self, review: Review) -> list[Span]:
        spans: list[Span] = []
        for role, tags in zip(self.roles, self.tag_sequence(review.tokens, review.pos)):
            spans += decode(tags, role)
        return spans

    # -- serialization -------------------------------------------------------

    def state(self) -> tuple[dict, dict[str, np.ndarray]]:
        meta = {
            "kind": self.kind,
            "roles": list(self.roles),
            "use_pos": self.use_pos,
            "head_weights": list(self.head_weights),
            "hyperparams": self.hp.to_dict(),
            "vocabulary": list(self.vocab.words),
        }
        return meta, {p.name: p.value for p in self.parameters()}

    @classmethod
    def from_state(cls, meta: dict, arrays: dict[str, np.ndarray]) -> TaggerModel:
        hp = HyperParams.from_dict(meta["hyperparams"])
        vocab = Vocabulary.from_list(meta["vocabulary"])
        kind = meta["kind"]
        roles = meta["roles"]
        model = cls.create(kind, hp, vocab, np.random.default_rng(0), use_pos=meta["use_pos"],
                           role=roles[0])
        model.head_weights = tuple(meta["head_weights"])
        assign_parameters(model.parameters(), arrays)
        return model


def train_tagger(corpus: Sequence[Review], kind: str = "stacked", use_pos: Optional[bool] = None,
                 epochs: int = 15, seed: int = 0, hp: Optional[HyperParams] = None,
                 role: str = "aspect", vocab: Optional[Vocabulary] = None,
                 word_table: Optional[Parameter] = None, rms: Optional[RmsPropConfig] = None,
                 head_weights: Optional[Sequence[float]] = None) -> TaggerModel:
    """Train a tagger one review at a time with RMSProp.

    Without a vocabulary one is built from the corpus and the word table is
    randomly initialised. The per-epoch mean loss is kept on
    ``model.loss_history``.
    """
    if not corpus:
        raise DataError("cannot train on an empty corpus")
    hp = hp or HyperParams()
    rng = np.random.default_rng(seed)
    if vocab is None:
        vocab = Vocabulary.from_tokens(r.tokens for r in corpus)
    model = TaggerModel.create(kind, hp, vocab, rng, use_pos=use_pos, role=role, word_table=word_table)
    if head_weights is not None:
        model.head_weights = tuple(head_weights)
    samples = [r for r in corpus if len(r)]
    model.loss_history = fit(
        model, samples, epochs, rng, rms,
        lambda r: model.loss(r, train=True, rng=rng, backward=True),
        f"tagger[{kind}]",
    )
    return model


def predict_corpus(model: TaggerModel, corpus: Sequence[Review]) -> list[list[Span]]:
    return [model.predict(r) for r in corpus]


class TermExtractor:
    """Stage one of the pipeline: either one joint tagger or a pair of
    separately trained aspect and opinion taggers."""

    BUNDLE_KIND = "terms"

    def __init__(self, models: Sequence[TaggerModel]):
        roles = [r for m in models for r in m.roles]
        if sorted(roles) != sorted(ROLES):
            raise ValueError(f"term extractor must cover both roles, got {roles}")
        self.models = list(models)

    @property
    def joint(self) -> bool:
        return len(self.models) == 1

    def parameters(self) -> list[Parameter]:
        return [p for m in self.models for p in m.parameters()]

    def extract(self, review: Review) -> tuple[list[Span], list[Span]]:
        spans = [s for m in self.models for s in m.predict(review)]
        aspects = sorted(s for s in spans if s.role == "aspect")
        opinions = sorted(s for s in spans if s.role == "opinion")
        return aspects, opinions

    def state(self) -> tuple[dict, dict[str, np.ndarray]]:
        meta: dict = {"models": []}
        arrays: dict[str, np.ndarray] = {}
        for m in self.models:
            prefix = "joint" if m.kind.startswith("joint") else m.roles[0]
            mm, ma = m.state()
            meta["models"].append({"prefix": prefix, **mm})
            arrays.update({f"{prefix}/{k}": v for k, v in ma.items()})
        return meta, arrays

    @classmethod
    def from_state(cls, meta: dict, arrays: dict[str, np.ndarray]) -> TermExtractor:
        models = []
        for mm in meta["models"]:
            prefix = mm["prefix"]
            sub = {k[len(prefix) + 1:]: v for k, v in arrays.items() if k.startswith(prefix + "/")}
            models.append(TaggerModel.from_state(mm, sub))
        return cls(models)


def train_term_extractor(corpus: Sequence[Review], kind: str = "stacked", **kwargs) -> TermExtractor:
    """Train a joint tagger, or one tagger per role with seeds ``seed`` and
    ``seed + 1``."""
    if kind.startswith("joint"):
        return TermExtractor([train_tagger(corpus, kind, **kwargs)])
    seed = kwargs.pop("seed", 0)
    return TermExtractor([
        train_tagger(corpus, kind, role=role, seed=seed + k, **kwargs)
        for k, role in enumerate(ROLES)
    ])
