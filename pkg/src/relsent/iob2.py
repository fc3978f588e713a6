"""IOB2 encoding of term annotations.

Aspect and opinion annotations are encoded as two separate tag sequences,
since the two roles may overlap in the same text.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import DataError

I, O, B = "I", "O", "B"
TAGS = (I, O, B)  # column order of the tagger's output layer
TAG_INDEX = {t: k for k, t in enumerate(TAGS)}

ROLES = ("aspect", "opinion")
SENTIMENTS = ("positive", "neutral", "negative", "unknown")


@dataclass(frozen=True, order=True)
class Span:
    """Half-open token interval ``[start, end)``.

    ``sentiment`` is carried along but ignored by equality, so strict
    matching compares boundaries and role only.
    """

    start: int
    end: int
    role: str = "aspect"
    sentiment: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise DataError(f"unknown span role {self.role!r}")
        if self.sentiment is not None and self.sentiment not in SENTIMENTS:
            raise DataError(f"unknown sentiment {self.sentiment!r}")
        if not 0 <= self.start < self.end:
            raise DataError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def with_sentiment(self, sentiment: Optional[str]) -> Span:
        return Span(self.start, self.end, self.role, sentiment)


def check_spans(spans: Iterable[Span], length: int) -> list[Span]:
    """Return spans sorted by start; fault on out-of-range or overlap."""
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    prev_end = 0
    for s in ordered:
        if s.end > length:
            raise DataError(f"span [{s.start}, {s.end}) exceeds length {length}")
        if s.start < prev_end:
            raise DataError(f"span [{s.start}, {s.end}) overlaps a previous {s.role} span")
        prev_end = s.end
    return ordered


def encode(spans: Iterable[Span], length: int) -> list[str]:
    tags = [O] * length
    for s in check_spans(spans, length):
        tags[s.start] = B
        for k in range(s.start + 1, s.end):
            tags[k] = I
    return tags


def is_valid(tags: Sequence[str]) -> bool:
    prev = O
    for t in tags:
        if t not in TAG_INDEX:
            return False
        if t == I and prev == O:
            return False
        prev = t
    return True


def decode(tags: Sequence[str], role: str = "aspect") -> list[Span]:
    """Inverse of :func:`encode`. Invalid sequences must be repaired first."""
    spans: list[Span] = []
    start = None
    for n, t in enumerate(tags):
        if t == B:
            if start is not None:
                spans.append(Span(start, n, role))
            start = n
        elif t == I:
            if start is None:
                raise DataError(f"I tag at position {n} does not continue an annotation")
        elif t == O:
            if start is not None:
                spans.append(Span(start, n, role))
            start = None
        else:
            raise DataError(f"unknown tag {t!r} at position {n}")
    if start is not None:
        spans.append(Span(start, len(tags), role))
    return spans


def repair(tags: Sequence[str]) -> list[str]:
    """Promote every orphan ``I`` (one not preceded by ``I`` or ``B``) to ``B``."""
    out: list[str] = []
    prev = O
    for t in tags:
        if t == I and prev == O:
            t = B
        out.append(t)
        prev = t
    return out
