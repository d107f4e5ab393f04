"""Standalone FEMB writer.

The extractor talks to the federated package only through this file format:
a 23-byte little-endian header (magic, version, dtype code, sample count,
feature dim, class count), then uint32 labels, then float32 features in
sample order.
"""

from __future__ import annotations

import struct

import numpy as np

FEMB_MAGIC = b"FEMB"
FEMB_VERSION = 1
HEADER = struct.Struct("<4sHBQII")


def femb_file_bytes(sample_count: int, dim: int) -> int:
    """Exact file size implied by the header arithmetic."""
    return HEADER.size + sample_count * 4 + sample_count * dim * 4


def write_femb(path, features: np.ndarray, labels: np.ndarray, n_classes: int) -> None:
    features = np.asarray(features, dtype=np.float32)
    labels = np.asarray(labels)
    if features.ndim != 2:
        raise ValueError("features must be a 2-D (samples x dim) array")
    if labels.shape != (features.shape[0],):
        raise ValueError("one label per sample is required")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    m, n = features.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(FEMB_MAGIC, FEMB_VERSION, 0, m, n, n_classes))
        fh.write(labels.astype("<u4").tobytes())
        fh.write(features.astype("<f4").tobytes())
