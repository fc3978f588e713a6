"""Model bundles: a JSON header followed by a little-endian float64 block.

Layout::

    b"RSBUNDLE"              8-byte magic
    uint64 (LE)              header length in bytes
    header                   UTF-8 JSON, sorted keys, no whitespace
    float64 (LE) payload     every parameter, flattened, in header order

The header records the format version, model kind, model metadata
(hyperparameters, vocabulary, ...) and ``[name, shape]`` for each array.
Writing the same model twice yields identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .errors import BundleError, ShapeError
from .relation import RelationModel
from .sentiment import SentimentModel
from .tagger import TermExtractor

MAGIC = b"RSBUNDLE"
FORMAT_VERSION = 1
MODEL_TYPES = {cls.BUNDLE_KIND: cls for cls in (TermExtractor, SentimentModel, RelationModel)}

Model = Union[TermExtractor, SentimentModel, RelationModel]


def to_bytes(model: Model) -> bytes:
    meta, arrays = model.state()
    names = list(arrays)
    header = {
        "format_version": FORMAT_VERSION,
        "kind": model.BUNDLE_KIND,
        "meta": meta,
        "parameters": [[n, list(arrays[n].shape)] for n in names],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes() for n in names)
    return MAGIC + struct.pack("<Q", len(head)) + head + body


def read_header(data: bytes) -> tuple[dict, int]:
    if data[:8] != MAGIC:
        raise BundleError("not a model bundle (bad magic)")
    if len(data) < 16:
        raise BundleError("truncated bundle header")
    (n,) = struct.unpack("<Q", data[8:16])
    try:
        header = json.loads(data[16:16 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleError(f"corrupt bundle header: {exc}") from None
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise BundleError(f"bundle format version {version!r}, expected {FORMAT_VERSION}")
    return header, 16 + n


def from_bytes(data: bytes) -> Model:
    header, offset = read_header(data)
    kind = header.get("kind")
    if kind not in MODEL_TYPES:
        raise BundleError(f"unknown model kind {kind!r}")
    arrays: dict[str, np.ndarray] = {}
    for name, shape in header["parameters"]:
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 8 * count
        if end > len(data):
            raise BundleError(f"payload truncated at parameter {name!r}")
        arrays[name] = np.frombuffer(data[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
        offset = end
    if offset != len(data):
        raise BundleError(f"{len(data) - offset} trailing bytes after payload")
    try:
        return MODEL_TYPES[kind].from_state(header["meta"], arrays)
    except (KeyError, ShapeError, TypeError) as exc:
        raise BundleError(f"bundle does not describe a valid {kind} model: {exc}") from None


def save_bundle(model: Model, path: str | Path) -> None:
    Path(path).write_bytes(to_bytes(model))


def load_bundle(path: str | Path, expect: str | None = None) -> Model:
    model = from_bytes(Path(path).read_bytes())
    if expect is not None and model.BUNDLE_KIND != expect:
        raise BundleError(f"{path}: expected a {expect} bundle, found {model.BUNDLE_KIND}")
    return model


def inspect_bundle(path: str | Path) -> dict:
    """Header summary without building the model."""
    header, _ = read_header(Path(path).read_bytes())
    params = header["parameters"]
    summary = {
        "format_version": header["format_version"],
        "kind": header["kind"],
        "parameter_count": int(sum(np.prod(s, dtype=np.int64) for _, s in params)),
        "parameters": {n: s for n, s in params},
    }
    meta = header["meta"]
    if "models" in meta:
        summary["taggers"] = [{"kind": m["kind"], "roles": m["roles"], "use_pos": m["use_pos"],
                               "vocabulary": len(m["vocabulary"])} for m in meta["models"]]
    else:
        summary["vocabulary"] = len(meta["vocabulary"])
    return summary
