"""Content-based web-spam scoring and retrieval-run rehabilitation toolkit."""

from webspam.classifier import (
    DEFAULT_DELTA,
    NUM_BUCKETS,
    TRUNCATE_BYTES,
    TrainingExample,
    WeightVector,
    feature_hash,
    load_model,
    save_model,
    spamminess,
    train_pass,
    train_update,
)

__all__ = [
    "DEFAULT_DELTA",
    "NUM_BUCKETS",
    "TRUNCATE_BYTES",
    "TrainingExample",
    "WeightVector",
    "feature_hash",
    "load_model",
    "save_model",
    "spamminess",
    "train_pass",
    "train_update",
]
