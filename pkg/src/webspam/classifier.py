"""Hashed byte-4-gram linear classifier with online logistic-regression training.

A page is reduced to the set of overlapping byte 4-grams of its first 35,000
bytes, hashed into 1,000,081 buckets.  Features are binary (presence only).
The spamminess score is the sum of the weights at the occupied buckets, and
training is a single online gradient-descent pass with learning rate 0.002.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence

import numpy as np

NUM_BUCKETS = 1000081
TRUNCATE_BYTES = 35000
DEFAULT_DELTA = 0.002

MODEL_MAGIC = b"WSPM"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sIIfQ")  # magic, version, buckets, delta, examples

SPAM = "spam"
NONSPAM = "nonspam"


class ModelFormatError(ValueError):
    """Raised when a model file is truncated or structurally invalid."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


@dataclass
class WeightVector:
    """Per-bucket log-odds weights plus the training hyperparameters."""

    weights: np.ndarray = field(
        default_factory=lambda: np.zeros(NUM_BUCKETS, dtype=np.float32)
    )
    delta: float = DEFAULT_DELTA
    trained_examples: int = 0

    def __post_init__(self):
        if self.weights.shape != (NUM_BUCKETS,):
            raise ValueError(
                f"weight vector must have length {NUM_BUCKETS}, "
                f"got {self.weights.shape}"
            )

    def copy(self) -> "WeightVector":
        return WeightVector(self.weights.copy(), self.delta, self.trained_examples)


@dataclass(frozen=True)
class TrainingExample:
    doc_id: str
    data: bytes
    label: str  # "spam" or "nonspam"
    source: str = "other"

    def __post_init__(self):
        if self.label not in (SPAM, NONSPAM):
            raise ValueError(f"bad label {self.label!r} for {self.doc_id}")
        if not self.data:
            raise ValueError(f"empty page bytes for {self.doc_id}")


def _bucket_stream(page: bytes) -> np.ndarray:
    """Bucket index of every overlapping byte 4-gram, in window order.

    Only the first 35,000 bytes participate; pages shorter than 4 bytes
    yield an empty array.
    """
    m = min(len(page), TRUNCATE_BYTES)
    if m < 4:
        return np.empty(0, dtype=np.uint32)
    a = np.frombuffer(page, dtype=np.uint8, count=m).astype(np.uint32)
    # The 32-bit rolling accumulator b after consuming byte i is exactly the
    # big-endian 4-byte window ending at i, so the whole hash stream is a
    # sliding-window computation.
    words = (a[:-3] << np.uint32(24)) | (a[1:-2] << np.uint32(16)) \
        | (a[2:-1] << np.uint32(8)) | a[3:]
    return words % np.uint32(NUM_BUCKETS)


def _unique_buckets(page: bytes) -> np.ndarray:
    """Deduplicated bucket indices in ascending order (fast path)."""
    return np.unique(_bucket_stream(page))


def feature_hash(page: bytes) -> np.ndarray:
    """Hash a page's overlapping byte 4-grams into bucket indices.

    Returns the deduplicated indices in first-occurrence order.
    """
    idx = _bucket_stream(page)
    if idx.size == 0:
        return np.empty(0, dtype=np.int64)
    _, first = np.unique(idx, return_index=True)
    first.sort()
    return idx[first].astype(np.int64)


def spamminess(w: WeightVector, page: bytes) -> float:
    """Log-odds spam score: sum of weights at the page's feature buckets."""
    idx = _unique_buckets(page)
    if idx.size == 0:
        return 0.0
    return float(np.sum(w.weights[idx], dtype=np.float64))


def train_update(w: WeightVector, example: TrainingExample) -> WeightVector:
    """One online logistic-regression gradient step, in place.

    The probability estimate uses the pre-update weights; every feature
    bucket of the example then moves by delta * (isspam - p).
    """
    idx = _unique_buckets(example.data)
    p = 1.0 / (1.0 + np.exp(-spamminess(w, example.data)))
    isspam = 1.0 if example.label == SPAM else 0.0
    if idx.size:
        w.weights[idx] += np.float32(w.delta * (isspam - p))
    w.trained_examples += 1
    return w


def train_pass(
    examples: Iterable[TrainingExample], delta: float = DEFAULT_DELTA
) -> WeightVector:
    """Train a fresh model with a single pass over the examples, in order."""
    w = WeightVector(delta=delta)
    for example in examples:
        train_update(w, example)
    if w.trained_examples == 0:
        raise ValueError("no training examples")
    return w


def save_model(w: WeightVector, path) -> None:
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                MODEL_MAGIC, MODEL_VERSION, NUM_BUCKETS, w.delta, w.trained_examples
            )
        )
        fh.write(w.weights.astype("<f4", copy=False).tobytes())


def load_model(path) -> WeightVector:
    with open(path, "rb") as fh:
        return _read_model(fh)


def _read_model(fh: BinaryIO) -> WeightVector:
    header = fh.read(_HEADER.size)
    if len(header) < _HEADER.size:
        raise ModelFormatError("truncated header", len(header))
    magic, version, buckets, delta, examples = _HEADER.unpack(header)
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}", 0)
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported version {version}", 4)
    if buckets != NUM_BUCKETS:
        raise ModelFormatError(f"unexpected bucket count {buckets}", 8)
    body = fh.read(NUM_BUCKETS * 4)
    if len(body) < NUM_BUCKETS * 4:
        raise ModelFormatError("truncated weights", _HEADER.size + len(body))
    weights = np.frombuffer(body, dtype="<f4").astype(np.float32)
    if not np.all(np.isfinite(weights)):
        raise ModelFormatError("non-finite weight", _HEADER.size)
    return WeightVector(weights, float(delta), int(examples))


def read_manifest(path, base_dir=None) -> Sequence[TrainingExample]:
    """Read a training-example manifest.

    Tab-separated, one example per line: label, source tag, doc_id, and a
    bytes reference which is either ``inline:<utf-8 text>`` or
    ``file:<path>`` (a bare value is treated as a file path).
    """
    import os

    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 3)
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
            label, source, doc_id, ref = parts
            if ref.startswith("inline:"):
                data = ref[len("inline:"):].encode("utf-8")
            else:
                if ref.startswith("file:"):
                    ref = ref[len("file:"):]
                if base_dir is not None and not os.path.isabs(ref):
                    ref = os.path.join(base_dir, ref)
                with open(ref, "rb") as payload:
                    data = payload.read()
            examples.append(TrainingExample(doc_id, data, label, source))
    return examples


def write_manifest(
    examples: Iterable[TrainingExample], path, payload_dir=None
) -> None:
    """Write a training-example manifest.

    Payloads that survive a UTF-8 round trip without tabs or newlines are
    stored inline; anything else is written to ``payload_dir`` (which must
    sit next to the manifest, so the ``file:`` references stay relative)
    and is an error if no payload directory was given.
    """
    import os
    import re

    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            text = ex.data.decode("utf-8", errors="replace")
            inline_safe = (
                text.encode("utf-8") == ex.data
                and "\t" not in text
                and "\n" not in text
                and "\r" not in text
            )
            if inline_safe:
                ref = f"inline:{text}"
            elif payload_dir is not None:
                os.makedirs(payload_dir, exist_ok=True)
                name = re.sub(r"[^\w.-]", "_", ex.doc_id) or "payload"
                target = os.path.join(payload_dir, f"{name}.bin")
                with open(target, "wb") as payload:
                    payload.write(ex.data)
                ref = f"file:{os.path.join(os.path.basename(payload_dir), f'{name}.bin')}"
            else:
                raise ValueError(f"{ex.doc_id}: payload not inline-representable")
            fh.write(f"{ex.label}\t{ex.source}\t{ex.doc_id}\t{ref}\n")
