"""Token features: word embeddings, POS one-hots, distance embeddings, and
the fixed-width windows used by the sentiment and relation classifiers."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, ShapeError
from .iob2 import Span
from .nn import DTYPE, Embedding, Parameter, embedding_uniform

PAD = "<PAD>"
UNK = "<UNK>"

# 45 Penn Treebank tags as emitted by the Stanford tagger, plus padding.
PENN_TAGS = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN",
    "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP",
    "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",
    "WP$", "WRB", "#", "$", ".", ",", ":", "-LRB-", "-RRB-", "``", "''",
)
POS_TAGS = PENN_TAGS + (PAD,)
POS_PAD_INDEX = len(PENN_TAGS)
_POS_INDEX = {t: k for k, t in enumerate(PENN_TAGS)}
_POS_ALIASES = {"(": "-LRB-", ")": "-RRB-", "[": "-LRB-", "]": "-RRB-", "{": "-LRB-", "}": "-RRB-"}


@dataclass(frozen=True)
class HyperParams:
    d_word: int = 100
    d_pos: int = len(POS_TAGS)
    d_dist: int = 10
    d_conv: int = 50
    l_conv: int = 3
    d_gru: int = 100
    d_pol: int = 100
    d_rel: int = 100
    l_pol: int = 20
    l_rel: int = 20
    max_distance: int = 20
    maxout_pieces: int = 2
    dropout: float = 0.5

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            if f.name != "dropout" and getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")
        if self.l_conv % 2 == 0:
            raise ValueError("l_conv must be odd")
        if self.d_pos != len(POS_TAGS):
            raise ValueError(f"d_pos is fixed at {len(POS_TAGS)}")
        if self.maxout_pieces < 2:
            raise ValueError("maxout needs at least two pieces")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    @classmethod
    def tiny(cls) -> HyperParams:
        """Small sizes for gradient checks and quick demos."""
        return cls(d_word=4, d_dist=3, d_conv=3, d_gru=4, d_pol=3, d_rel=3, l_pol=6, l_rel=6)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> HyperParams:
        return cls(**d)


# ---------------------------------------------------------------------------
# vocabulary and embeddings


class Vocabulary:
    """Lowercased word index with ``<PAD>`` at 0 and ``<UNK>`` at 1."""

    pad_index = 0
    unk_index = 1

    def __init__(self, words: Iterable[str] = ()):
        self.words: list[str] = [PAD, UNK]
        self._index: dict[str, int] = {PAD: 0, UNK: 1}
        for w in words:
            self.add(w)

    def add(self, word: str) -> int:
        w = word.lower()
        if w not in self._index:
            self._index[w] = len(self.words)
            self.words.append(w)
        return self._index[w]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.words == other.words

    def index(self, word: str) -> int:
        return self._index.get(word.lower(), self.unk_index)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.index(t) for t in tokens]

    @classmethod
    def from_tokens(cls, sentences: Iterable[Sequence[str]]) -> Vocabulary:
        """Vocabulary in first-occurrence order (stable across processes)."""
        vocab = cls()
        for tokens in sentences:
            for t in tokens:
                vocab.add(t)
        return vocab

    @classmethod
    def from_list(cls, words: Sequence[str]) -> Vocabulary:
        if list(words[:2]) != [PAD, UNK]:
            raise DataError("serialized vocabulary must start with <PAD>, <UNK>")
        vocab = cls(words[2:])
        if len(vocab) != len(words):
            raise DataError("serialized vocabulary contains duplicates")
        return vocab


def random_embeddings(vocab: Vocabulary, dim: int, rng: np.random.Generator,
                      name: str = "word_embedding") -> Parameter:
    table = embedding_uniform(rng, len(vocab), dim)
    table[vocab.pad_index] = 0.0
    return Parameter(name, table)


def load_embeddings(path: str | Path, trim_to: int = 200_000, dim: int = 100,
                    name: str = "word_embedding") -> tuple[Vocabulary, Parameter]:
    """Read word2vec text vectors (header ``"count dim"``), keeping the first
    ``trim_to`` words. ``<UNK>`` gets the mean vector, ``<PAD>`` zeros."""
    vocab = Vocabulary()
    rows: list[np.ndarray] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise DataError(f"{path}:1: expected header 'count dim'")
        count, file_dim = int(header[0]), int(header[1])
        if file_dim != dim:
            raise DataError(f"{path}: vectors have dimension {file_dim}, expected {dim}")
        for lineno, line in enumerate(fh, start=2):
            if len(rows) >= min(trim_to, count):
                break
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) != dim + 1:
                raise DataError(f"{path}:{lineno}: expected a word and {dim} values")
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=DTYPE)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if parts[0].lower() in vocab:
                continue
            vocab.add(parts[0])
            rows.append(vec)
    table = np.zeros((len(vocab), dim), dtype=DTYPE)
    if rows:
        body = np.stack(rows)
        table[2:] = body
        table[vocab.unk_index] = body.mean(axis=0)
    return vocab, Parameter(name, table)


# ---------------------------------------------------------------------------
# POS tags


def pos_index(tag: str) -> int:
    tag = _POS_ALIASES.get(tag, tag)
    return _POS_INDEX.get(tag, POS_PAD_INDEX)


def pos_onehot(indices: Sequence[int]) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    out = np.zeros((idx.shape[0], len(POS_TAGS)), dtype=DTYPE)
    out[np.arange(idx.shape[0]), idx] = 1.0
    return out


_NUMBER = re.compile(r"^[+-]?\d[\d.,]*$")


def fallback_pos_tags(tokens: Sequence[str]) -> list[str]:
    """Crude stand-in when no tagger output is available: punctuation,
    numbers, and everything else as NN."""
    tags = []
    for t in tokens:
        if t in {".", "!", "?"}:
            tags.append(".")
        elif t in {",", ";"}:
            tags.append(",")
        elif t in {":", "-", "--", "..."}:
            tags.append(":")
        elif _NUMBER.match(t):
            tags.append("CD")
        else:
            tags.append(_POS_ALIASES.get(t, "NN"))
    return tags


# ---------------------------------------------------------------------------
# distances and windows


class DistanceIndexer:
    """Maps signed word distances to rows of a distance embedding table.

    Distances are clamped to ``[-radius, radius]``; the last row is reserved
    for padding positions.
    """

    def __init__(self, radius: int = 20):
        self.radius = radius

    @property
    def table_size(self) -> int:
        return 2 * self.radius + 2

    @property
    def pad_index(self) -> int:
        return 2 * self.radius + 1

    def index(self, d: int) -> int:
        return max(-self.radius, min(self.radius, int(d))) + self.radius

    def encode(self, distances: Iterable[int]) -> list[int]:
        return [self.index(d) for d in distances]


def relative_distances(length: int, span: Span) -> list[int]:
    """Signed offset of every token from ``span``: 0 inside, -1 for the token
    just left of it, +1 for the token just right of it."""
    if span.end > length:
        raise DataError(f"span [{span.start}, {span.end}) exceeds length {length}")
    out = []
    for i in range(length):
        if i < span.start:
            out.append(i - span.start)
        elif i < span.end:
            out.append(0)
        else:
            out.append(i - span.end + 1)
    return out


def span_center(span: Span) -> int:
    return (span.start + span.end - 1) // 2


def extract_window(length: int, spans: Sequence[Span], window: int) -> tuple[range, int]:
    """Token range of width ``window`` centred on one span or on the midpoint
    of two spans, plus the number of left padding positions.

    Near a text edge the window is shifted inwards rather than shrunk; only
    texts shorter than ``window`` are padded.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if length <= window:
        return range(0, length), window - length
    centers = [span_center(s) for s in spans]
    c = centers[0] if len(centers) == 1 else (centers[0] + centers[1]) // 2
    lo = c - window // 2
    hi = lo + window
    if lo < 0:
        lo, hi = 0, window
    elif hi > length:
        lo, hi = length - window, length
    return range(lo, hi), 0


@dataclass
class WindowFeatures:
    """Index sequences for one windowed classifier input, padding included."""

    words: list[int]
    pos: list[int]
    distances: list[list[int]]
    token_range: range
    left_pad: int


def window_features(tokens: Sequence[str], pos: Sequence[str], focus: Sequence[Span],
                    window: int, vocab: Vocabulary, indexer: DistanceIndexer) -> WindowFeatures:
    """Windowed word/POS indices and one distance row per focus span.

    Distances are measured over the full text, then cut to the window.
    """
    n = len(tokens)
    rng_, left_pad = extract_window(n, focus, window)
    sl = slice(rng_.start, rng_.stop)
    words = [vocab.pad_index] * left_pad + vocab.encode(tokens[sl])
    tags = [POS_PAD_INDEX] * left_pad + [pos_index(t) for t in pos[sl]]
    dists = [
        [indexer.pad_index] * left_pad + indexer.encode(relative_distances(n, s)[sl])
        for s in focus
    ]
    return WindowFeatures(words, tags, dists, rng_, left_pad)


class InputEncoder:
    """Concatenates word embedding, optional POS one-hot and any number of
    learned distance embeddings per token."""

    def __init__(self, word_table: Parameter, use_pos: bool = True,
                 distance_tables: Sequence[Parameter] = ()):
        self.words = Embedding(word_table)
        self.use_pos = use_pos
        self.distances = [Embedding(t) for t in distance_tables]

    def parameters(self) -> list[Parameter]:
        return [self.words.table] + [d.table for d in self.distances]

    @property
    def width(self) -> int:
        return self.words.dim + (len(POS_TAGS) if self.use_pos else 0) + sum(d.dim for d in self.distances)

    def forward(self, words: Sequence[int], pos: Sequence[int] | None = None,
                distances: Sequence[Sequence[int]] = ()):
        n = len(words)
        if len(distances) != len(self.distances):
            raise ShapeError(f"expected {len(self.distances)} distance rows, got {len(distances)}")
        if self.use_pos and (pos is None or len(pos) != n):
            raise ShapeError("POS sequence length does not match word sequence")
        if any(len(d) != n for d in distances):
            raise ShapeError("distance sequence length does not match word sequence")
        parts = []
        u, wcache = self.words.forward(words)
        parts.append(u)
        if self.use_pos:
            parts.append(pos_onehot(pos))
        dcaches = []
        for emb, idx in zip(self.distances, distances):
            d, c = emb.forward(idx)
            parts.append(d)
            dcaches.append(c)
        x = np.concatenate(parts, axis=1) if n else np.zeros((0, self.width), dtype=DTYPE)
        return x, (wcache, dcaches)

    def backward(self, dx: np.ndarray, cache) -> None:
        wcache, dcaches = cache
        col = self.words.dim
        self.words.backward(dx[:, :col], wcache)
        if self.use_pos:
            col += len(POS_TAGS)
        for emb, c in zip(self.distances, dcaches):
            emb.backward(dx[:, col:col + emb.dim], c)
            col += emb.dim
