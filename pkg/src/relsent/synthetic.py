"""Deterministic templated review corpora for tests and demos.

``templated_corpus()`` reproduces the bundled ``data/synthetic30.jsonl``:
30 short product reviews with aspect and opinion terms, all four sentiment
labels, and gold relations including unrelated aspect/opinion pairs.
"""

from __future__ import annotations

from importlib import resources
from typing import Sequence

import numpy as np

from .corpus import Review, load_corpus
from .iob2 import SENTIMENTS, Span

ASPECTS = [
    (("battery", "life"), ("NN", "NN")),
    (("screen",), ("NN",)),
    (("sound", "quality"), ("NN", "NN")),
    (("keyboard",), ("NN",)),
    (("price",), ("NN",)),
    (("camera",), ("NN",)),
    (("charging", "cable"), ("NN", "NN")),
    (("speakers",), ("NNS",)),
    (("touchpad",), ("NN",)),
    (("design",), ("NN",)),
]

# adjectival opinions; the label is fixed per phrase
OPINIONS = [
    (("great",), ("JJ",), "positive"),
    (("excellent",), ("JJ",), "positive"),
    (("really", "good"), ("RB", "JJ"), "positive"),
    (("terrible",), ("JJ",), "negative"),
    (("awful",), ("JJ",), "negative"),
    (("far", "too", "weak"), ("RB", "RB", "JJ"), "negative"),
    (("okay",), ("JJ",), "neutral"),
    (("average",), ("JJ",), "neutral"),
    (("strange",), ("JJ",), "unknown"),
    (("unusual",), ("JJ",), "unknown"),
]

VERB_OPINIONS = [
    (("love",), ("VBP",), "positive"),
    (("hate",), ("VBP",), "negative"),
]


class _Builder:
    def __init__(self):
        self.tokens: list[str] = []
        self.pos: list[str] = []
        self.aspects: list[Span] = []
        self.opinions: list[Span] = []

    def words(self, text: str, tags: str) -> None:
        self.tokens += text.split()
        self.pos += tags.split()

    def aspect(self, entry) -> int:
        words, tags = entry
        start = len(self.tokens)
        self.tokens += words
        self.pos += tags
        self.aspects.append(Span(start, len(self.tokens), "aspect"))
        return len(self.aspects) - 1

    def opinion(self, entry) -> int:
        words, tags, label = entry
        start = len(self.tokens)
        self.tokens += words
        self.pos += tags
        self.opinions.append(Span(start, len(self.tokens), "opinion", label))
        return len(self.opinions) - 1

    def review(self, rid: str, relations) -> Review:
        return Review(rid, self.tokens, self.pos, self.aspects, self.opinions, list(relations))


def _review(template: int, rid: str, a, a2, o, o2, v) -> Review:
    b = _Builder()
    if template == 0:  # the A is O .
        b.words("the", "DT"); x = b.aspect(a); b.words("is", "VBZ"); y = b.opinion(o); b.words(".", ".")
        return b.review(rid, [(x, y)])
    if template == 1:  # the A is O but the A2 is O2 .
        b.words("the", "DT"); x = b.aspect(a); b.words("is", "VBZ"); y = b.opinion(o)
        b.words("but the", "CC DT"); x2 = b.aspect(a2); b.words("is", "VBZ"); y2 = b.opinion(o2)
        b.words(".", ".")
        return b.review(rid, [(x, y), (x2, y2)])
    if template == 2:  # i V the A .
        b.words("i", "PRP"); y = b.opinion(v); b.words("the", "DT"); x = b.aspect(a); b.words(".", ".")
        return b.review(rid, [(x, y)])
    if template == 3:  # the A and the A2 are O .
        b.words("the", "DT"); x = b.aspect(a); b.words("and the", "CC DT"); x2 = b.aspect(a2)
        b.words("are", "VBP"); y = b.opinion(o); b.words(".", ".")
        return b.review(rid, [(x, y), (x2, y)])
    if template == 4:  # the A is O and shipping was O2 .
        b.words("the", "DT"); x = b.aspect(a); b.words("is", "VBZ"); y = b.opinion(o)
        b.words("and shipping was", "CC NN VBD"); b.opinion(o2); b.words(".", ".")
        return b.review(rid, [(x, y)])
    # we got it last week and its A seems O .
    b.words("we got it last week and its", "PRP VBD PRP JJ NN CC PRP$"); x = b.aspect(a)
    b.words("seems", "VBZ"); y = b.opinion(o); b.words(".", ".")
    return b.review(rid, [(x, y)])


def templated_corpus(n: int = 30, seed: int = 7) -> list[Review]:
    """``n`` reviews cycling through six sentence templates."""
    rng = np.random.default_rng(seed)
    reviews = []
    for i in range(n):
        template = i % 6
        a_i, a2_i = rng.choice(len(ASPECTS), size=2, replace=False)
        o_i, o2_i = rng.choice(len(OPINIONS), size=2, replace=False)
        v_i = int(rng.integers(len(VERB_OPINIONS)))
        if i == 0:
            a_i, o_i = 0, 0  # "the battery life is great ."
        reviews.append(_review(template, f"syn{i:02d}", ASPECTS[a_i], ASPECTS[a2_i],
                               OPINIONS[o_i], OPINIONS[o2_i], VERB_OPINIONS[v_i]))
    return reviews


def load_synthetic() -> list[Review]:
    """The bundled 30-review corpus."""
    with resources.as_file(resources.files("relsent") / "data" / "synthetic30.jsonl") as path:
        return load_corpus(path)


def labelled_corpus(n_opinions: int, positive_rate: float, seed: int = 0,
                    per_review: int = 4) -> list[Review]:
    """Reviews whose gold opinion labels are positive with exactly
    ``round(n_opinions * positive_rate)`` occurrences, the rest spread over
    the other labels, in seeded random order."""
    rng = np.random.default_rng(seed)
    n_pos = round(n_opinions * positive_rate)
    others = [s for s in SENTIMENTS if s != "positive"]
    labels = ["positive"] * n_pos + [others[int(k)] for k in rng.integers(len(others), size=n_opinions - n_pos)]
    labels = [labels[int(k)] for k in rng.permutation(n_opinions)]
    reviews = []
    for r, start in enumerate(range(0, n_opinions, per_review)):
        chunk: Sequence[str] = labels[start:start + per_review]
        tokens, pos, opinions = [], [], []
        for lab in chunk:
            opinions.append(Span(len(tokens), len(tokens) + 1, "opinion", lab))
            tokens += ["word", ","]
            pos += ["JJ", ","]
        reviews.append(Review(f"lab{r:05d}", tokens, pos, [], opinions, []))
    return reviews
