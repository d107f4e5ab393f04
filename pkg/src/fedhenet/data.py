"""Embedding dataset I/O, heterogeneity partitioners, and synthetic data.

FEMB file layout (little-endian):
    magic "FEMB" | version u16 | dtype u8 (0 = f32) | sample_count u64 |
    dim u32 | class_count u32 | labels u32 * sample_count |
    data f32 row-major, sample_count x dim
Storage is f32; matrices are widened to f64 in memory.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import FormatError, InputError
from .rolann import EmbeddingDataset

FEMB_MAGIC = b"FEMB"
FEMB_VERSION = 1
_HEADER = struct.Struct("<4sHBQII")


class PartitionScheme(Enum):
    IID = "iid"
    DIRICHLET = "dirichlet"
    SINGLE_CLASS = "single_class"


@dataclass(frozen=True)
class PartitionSpec:
    scheme: PartitionScheme
    client_count: int
    seed: int = 0
    alpha: float = 1.0  # Dirichlet concentration; ignored by other schemes

    def __post_init__(self):
        if self.client_count < 1:
            raise InputError("client_count must be >= 1")
        if self.scheme is PartitionScheme.DIRICHLET and self.alpha <= 0:
            raise InputError("Dirichlet alpha must be > 0")


@dataclass
class PartitionPlan:
    assignments: list  # K index arrays, disjoint, covering [0, m)
    histograms: np.ndarray  # K x C per-client class counts

    @property
    def client_count(self) -> int:
        return len(self.assignments)


def save_femb(ds: EmbeddingDataset, path) -> None:
    m, n = ds.data.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEMB_MAGIC, FEMB_VERSION, 0, m, n, ds.n_classes))
        fh.write(ds.labels.astype("<u4").tobytes())
        fh.write(ds.data.astype("<f4").tobytes())


def load_femb(path) -> EmbeddingDataset:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"FEMB file truncated: {len(raw)} bytes, header needs {_HEADER.size}")
    magic, version, dtype, m, n, C = _HEADER.unpack_from(raw)
    if magic != FEMB_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {FEMB_MAGIC!r}")
    if version != FEMB_VERSION:
        raise FormatError(f"unsupported FEMB version {version}")
    if dtype != 0:
        raise FormatError(f"unsupported dtype code {dtype}")
    expected = _HEADER.size + m * 4 + m * n * 4
    if len(raw) != expected:
        raise FormatError(
            f"FEMB length mismatch: file has {len(raw)} bytes, header implies {expected} "
            f"(missing {expected - len(raw)})"
        )
    off = _HEADER.size
    labels = np.frombuffer(raw, dtype="<u4", count=m, offset=off).astype(np.int64)
    off += m * 4
    data = np.frombuffer(raw, dtype="<f4", count=m * n, offset=off).astype(np.float64)
    return EmbeddingDataset(data.reshape(m, n), labels, C)


def _largest_remainder_counts(p: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to `total` proportional to p (largest remainders)."""
    raw = p * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def partition(ds: EmbeddingDataset, spec: PartitionSpec) -> PartitionPlan:
    """Deterministic split of sample indices across clients.

    IID: seeded shuffle then round-robin.  Dirichlet: per class, client
    proportions drawn from Dir(alpha * 1_K) and realized by largest-remainder
    counts.  Single-class: client k serves class (k mod C) when K >= C, else
    class c goes to client (c mod K); clients sharing a class split it evenly.
    Empty clients are repaired by moving one sample from the largest client.
    """
    m = ds.n_samples
    K = spec.client_count
    if m < K:
        raise InputError(f"cannot split {m} samples across {K} clients")
    rng = np.random.default_rng(spec.seed)
    buckets = [[] for _ in range(K)]

    if spec.scheme is PartitionScheme.IID:
        order = rng.permutation(m)
        for k in range(K):
            buckets[k] = list(order[k::K])
    elif spec.scheme is PartitionScheme.DIRICHLET:
        for c in range(ds.n_classes):
            idx = np.flatnonzero(ds.labels == c)
            if idx.size == 0:
                continue
            idx = rng.permutation(idx)
            p = rng.dirichlet(np.full(K, spec.alpha))
            counts = _largest_remainder_counts(p, idx.size)
            pos = 0
            for k in range(K):
                buckets[k].extend(idx[pos : pos + counts[k]])
                pos += counts[k]
    elif spec.scheme is PartitionScheme.SINGLE_CLASS:
        C = ds.n_classes
        for c in range(C):
            idx = rng.permutation(np.flatnonzero(ds.labels == c))
            owners = (
                [k for k in range(K) if k % C == c] if K >= C else [c % K]
            )
            for j, k in enumerate(owners):
                buckets[k].extend(idx[j :: len(owners)])
    else:  # pragma: no cover
        raise InputError(f"unknown scheme {spec.scheme}")

    assignments = [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]
    # Repair empty clients deterministically: steal one sample from the largest.
    for k in range(K):
        while assignments[k].size == 0:
            donor = int(np.argmax([a.size for a in assignments]))
            assignments[k] = assignments[donor][:1]
            assignments[donor] = assignments[donor][1:]

    hist = np.zeros((K, ds.n_classes), dtype=np.int64)
    for k, idx in enumerate(assignments):
        cls, cnt = np.unique(ds.labels[idx], return_counts=True)
        hist[k, cls] = cnt
    total = sum(a.size for a in assignments)
    joined = np.concatenate(assignments) if total else np.empty(0, dtype=np.int64)
    if total != m or np.unique(joined).size != m:
        raise InputError("internal error: partition is not a disjoint cover")
    return PartitionPlan(assignments=assignments, histograms=hist)


def save_plan(plan: PartitionPlan, path) -> None:
    with open(path, "w") as fh:
        for k, idx in enumerate(plan.assignments):
            for i in idx:
                fh.write(f"{k}\t{i}\n")


def load_plan(path, labels=None, n_classes: int = 0) -> PartitionPlan:
    buckets = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                k, i = line.split("\t")
                buckets.setdefault(int(k), []).append(int(i))
            except ValueError as exc:
                raise FormatError(f"bad plan line {lineno}: {line!r}") from exc
    K = max(buckets) + 1 if buckets else 0
    assignments = [np.sort(np.asarray(buckets.get(k, []), dtype=np.int64)) for k in range(K)]
    hist = np.zeros((K, n_classes), dtype=np.int64)
    if labels is not None and n_classes:
        for k, idx in enumerate(assignments):
            cls, cnt = np.unique(np.asarray(labels)[idx], return_counts=True)
            hist[k, cls] = cnt
    return PartitionPlan(assignments=assignments, histograms=hist)


def synth_blobs(
    n_classes: int, dim: int, per_class: int, separation: float, seed: int
) -> EmbeddingDataset:
    """Axis-aligned Gaussian blobs: class c centered at separation * e_{c mod dim},
    unit covariance.  Deterministic for a fixed seed."""
    if separation < 0:
        raise InputError("separation must be >= 0")
    rng = np.random.default_rng(seed)
    rows = []
    labels = []
    for c in range(n_classes):
        mean = np.zeros(dim)
        mean[c % dim] = separation
        rows.append(rng.normal(size=(per_class, dim)) + mean)
        labels.extend([c] * per_class)
    return EmbeddingDataset(np.vstack(rows), np.asarray(labels), n_classes)
