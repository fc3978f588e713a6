"""Review corpus in a neutral JSON-lines format, evaluation metrics and
k-fold splitting.

One review per line::

    {"id": "r1", "tokens": [...], "pos": [...],
     "aspects": [{"start": 1, "end": 3}],
     "opinions": [{"start": 4, "end": 5, "sentiment": "positive"}],
     "relations": [[0, 0]]}

``relations`` holds ``[aspect index, opinion index]`` pairs into the two
span lists.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError
from .features import fallback_pos_tags
from .iob2 import Span, check_spans

log = logging.getLogger(__name__)


@dataclass
class Review:
    id: str
    tokens: list[str]
    pos: list[str]
    aspects: list[Span] = field(default_factory=list)
    opinions: list[Span] = field(default_factory=list)
    relations: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.validate()

    def __len__(self) -> int:
        return len(self.tokens)

    def validate(self) -> None:
        n = len(self.tokens)
        if len(self.pos) != n:
            raise DataError(f"review {self.id!r}: {len(self.pos)} POS tags for {n} tokens")
        for role, spans in (("aspect", self.aspects), ("opinion", self.opinions)):
            if any(s.role != role for s in spans):
                raise DataError(f"review {self.id!r}: {role} list holds a span with another role")
            check_spans(spans, n)
        for a, o in self.relations:
            if not (0 <= a < len(self.aspects) and 0 <= o < len(self.opinions)):
                raise DataError(f"review {self.id!r}: relation ({a}, {o}) out of range")

    def relation_spans(self) -> set[tuple[Span, Span]]:
        return {(self.aspects[a], self.opinions[o]) for a, o in self.relations}

    def with_annotations(self, aspects: Sequence[Span] = (), opinions: Sequence[Span] = (),
                         relations: Sequence[tuple[int, int]] = ()) -> Review:
        return Review(self.id, list(self.tokens), list(self.pos), list(aspects),
                      list(opinions), [tuple(r) for r in relations])

    def to_json(self) -> dict:
        def span(s: Span) -> dict:
            d = {"start": s.start, "end": s.end}
            if s.sentiment is not None:
                d["sentiment"] = s.sentiment
            return d

        return {
            "id": self.id,
            "tokens": self.tokens,
            "pos": self.pos,
            "aspects": [span(s) for s in self.aspects],
            "opinions": [span(s) for s in self.opinions],
            "relations": [list(r) for r in self.relations],
        }

    @classmethod
    def from_json(cls, obj: dict) -> Review:
        if not isinstance(obj, dict):
            raise DataError("review must be a JSON object")
        try:
            tokens = [str(t) for t in obj["tokens"]]
            pos = obj.get("pos")
            if pos is None:
                log.warning("review %s has no POS tags; using the fallback tagger", obj.get("id"))
                pos = fallback_pos_tags(tokens)
            aspects = [Span(int(s["start"]), int(s["end"]), "aspect", s.get("sentiment"))
                       for s in obj.get("aspects", [])]
            opinions = [Span(int(s["start"]), int(s["end"]), "opinion", s.get("sentiment"))
                        for s in obj.get("opinions", [])]
            relations = [(int(a), int(o)) for a, o in obj.get("relations", [])]
            return cls(str(obj["id"]), tokens, [str(p) for p in pos], aspects, opinions, relations)
        except KeyError as exc:
            raise DataError(f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(str(exc)) from None


def dumps_review(review: Review) -> str:
    return json.dumps(review.to_json(), ensure_ascii=False)


def load_corpus(path: str | Path) -> list[Review]:
    reviews = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                review = Review.from_json(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if review.id in seen:
                raise DataError(f"{path}:{lineno}: duplicate review id {review.id!r}")
            seen.add(review.id)
            reviews.append(review)
    return reviews


def save_corpus(reviews: Iterable[Review], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reviews:
            fh.write(dumps_review(r) + "\n")


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "tp": self.tp, "fp": self.fp, "fn": self.fn}


def prf_from_counts(tp: int, fp: int, fn: int) -> PRF:
    """Precision/recall/F1 from global counts.

    Nothing predicted and nothing to find scores 1 everywhere; otherwise an
    empty denominator scores 0.
    """
    if tp + fp + fn == 0:
        return PRF(1.0, 1.0, 1.0, 0, 0, 0)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return PRF(p, r, f, tp, fp, fn)


def _count(gold: Sequence[Iterable], predicted: Sequence[Iterable]) -> tuple[int, int, int]:
    if len(gold) != len(predicted):
        raise DataError(f"{len(gold)} gold items but {len(predicted)} predictions")
    tp = fp = fn = 0
    for g, p in zip(gold, predicted):
        gs, ps = set(g), set(p)
        hit = len(gs & ps)
        tp += hit
        fp += len(ps) - hit
        fn += len(gs) - hit
    return tp, fp, fn


def strict_prf(gold: Sequence[Iterable[Span]], predicted: Sequence[Iterable[Span]]) -> PRF:
    """Micro-averaged exact-boundary matching over aligned per-review span lists."""
    return prf_from_counts(*_count(gold, predicted))


def relation_prf(gold: Sequence[Iterable[tuple[Span, Span]]],
                 predicted: Sequence[Iterable[tuple[Span, Span]]]) -> PRF:
    """Same as :func:`strict_prf` over ``(aspect span, opinion span)`` pairs."""
    return prf_from_counts(*_count(gold, predicted))


@dataclass(frozen=True)
class Accuracy:
    accuracy: float
    correct: int
    incorrect: int

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "correct": self.correct, "incorrect": self.incorrect}


def sentiment_accuracy(gold: Sequence[str], predicted: Sequence[str]) -> Accuracy:
    if len(gold) != len(predicted):
        raise DataError(f"{len(gold)} gold labels but {len(predicted)} predictions")
    correct = sum(g == p for g, p in zip(gold, predicted))
    total = len(gold)
    return Accuracy(correct / total if total else 0.0, correct, total - correct)


def macro_average(scores: Sequence[PRF]) -> dict:
    """Unweighted mean of precision, recall and F1 across folds."""
    return {
        "precision": float(np.mean([s.precision for s in scores])),
        "recall": float(np.mean([s.recall for s in scores])),
        "f1": float(np.mean([s.f1 for s in scores])),
    }


# ---------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignment: dict[str, int]

    def fold_sizes(self) -> list[int]:
        sizes = [0] * self.k
        for f in self.assignment.values():
            sizes[f] += 1
        return sizes

    def splits(self, reviews: Sequence[Review]) -> Iterator[tuple[list[Review], list[Review]]]:
        """Yield ``(train, test)`` lists for each fold, in corpus order."""
        for f in range(self.k):
            train = [r for r in reviews if self.assignment[r.id] != f]
            test = [r for r in reviews if self.assignment[r.id] == f]
            yield train, test


def kfold(reviews: Sequence[Review], k: int = 10, seed: int = 0) -> FoldPlan:
    """Seeded shuffle followed by round-robin fold assignment."""
    if k < 1 or k > len(reviews):
        raise DataError(f"cannot split {len(reviews)} reviews into {k} folds")
    order = np.random.default_rng(seed).permutation(len(reviews))
    assignment = {reviews[int(i)].id: pos % k for pos, i in enumerate(order)}
    if len(assignment) != len(reviews):
        raise DataError("review ids must be unique for fold assignment")
    return FoldPlan(k, seed, assignment)
