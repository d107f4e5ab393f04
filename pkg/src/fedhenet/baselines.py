"""Iterative FL baselines on the same frozen embeddings: FedAvg and FedProx
with a linear softmax head, mini-batch SGD, and weighted federated averaging.
Used for the drift and communication-cost comparisons."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .federation.codec import model_payload_bytes
from .federation.envelope import ENVELOPE_OVERHEAD
from .rolann import EmbeddingDataset, _augment


@dataclass(frozen=True)
class BaselineConfig:
    algorithm: str = "fedavg"  # "fedavg" | "fedprox"
    mu: float = 0.0  # proximal strength; fedavg behaves as mu == 0
    rounds: int = 10
    local_epochs: int = 1
    learning_rate: float = 0.01
    batch_size: int = 64
    seed: int = 0
    include_bias: bool = True

    def __post_init__(self):
        if self.algorithm not in ("fedavg", "fedprox"):
            raise InputError(f"unknown baseline algorithm {self.algorithm!r}")
        if self.rounds < 1 or self.local_epochs < 1:
            raise InputError("rounds and local_epochs must be >= 1")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.mu < 0:
            raise InputError("invalid optimizer settings")


@dataclass
class LinearHead:
    W: np.ndarray  # d x C, bias row included when include_bias

    def copy(self) -> "LinearHead":
        return LinearHead(self.W.copy())


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def local_train(
    head: LinearHead,
    ds: EmbeddingDataset,
    cfg: BaselineConfig,
    W_global: np.ndarray,
    round_idx: int = 0,
    client_idx: int = 0,
) -> LinearHead:
    """Seeded mini-batch SGD on softmax cross-entropy plus the proximal term
    (mu/2) ||W - W_global||^2.  Batch order is deterministic per
    (seed, round, client)."""
    X = _augment(ds.data, cfg.include_bias)
    if X.shape[1] != head.W.shape[0]:
        raise InputError("head dimension does not match dataset features")
    Y = np.zeros((ds.n_samples, head.W.shape[1]))
    Y[np.arange(ds.n_samples), ds.labels] = 1.0
    W = head.W.copy()
    rng = np.random.default_rng([cfg.seed, round_idx, client_idx])
    m = ds.n_samples
    for _ in range(cfg.local_epochs):
        order = rng.permutation(m)
        for start in range(0, m, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            Xb, Yb = X[idx], Y[idx]
            P = _softmax(Xb @ W)
            grad = Xb.T @ (P - Yb) / idx.size + cfg.mu * (W - W_global)
            W -= cfg.learning_rate * grad
    return LinearHead(W)


def fedavg_round(heads, sample_counts) -> LinearHead:
    """Sample-count-weighted average of client heads."""
    heads = list(heads)
    counts = np.asarray(sample_counts, dtype=np.float64)
    if len(heads) != counts.size or counts.sum() <= 0:
        raise InputError("one positive sample count per head is required")
    weights = counts / counts.sum()
    W = sum(w * h.W for w, h in zip(weights, heads))
    return LinearHead(W)


def round_payload_bytes(d: int, n_classes: int, n_clients: int) -> int:
    """Wire bytes for one baseline round: every client uploads its head and
    downloads the average (plaintext weight matrices in envelopes)."""
    per_message = model_payload_bytes(d, n_classes) + ENVELOPE_OVERHEAD
    return 2 * n_clients * per_message


def run_baseline(
    train: EmbeddingDataset,
    test: EmbeddingDataset,
    plan,
    cfg: BaselineConfig,
) -> list:
    """R rounds of in-process federated training; returns one history row per
    round: dict(round, accuracy, cum_bytes, cum_seconds)."""
    d = train.n_features + (1 if cfg.include_bias else 0)
    C = train.n_classes
    W = np.zeros((d, C))
    client_sets = [train.subset(idx) for idx in plan.assignments]
    counts = [ds.n_samples for ds in client_sets]
    Xtest = _augment(test.data, cfg.include_bias)

    history = []
    cum_bytes = 0
    t_start = time.monotonic()
    mu = cfg.mu if cfg.algorithm == "fedprox" else 0.0
    eff = BaselineConfig(
        algorithm=cfg.algorithm,
        mu=mu,
        rounds=cfg.rounds,
        local_epochs=cfg.local_epochs,
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
        include_bias=cfg.include_bias,
    )
    for r in range(cfg.rounds):
        heads = [
            local_train(LinearHead(W.copy()), ds, eff, W, round_idx=r, client_idx=k)
            for k, ds in enumerate(client_sets)
        ]
        W = fedavg_round(heads, counts).W
        cum_bytes += round_payload_bytes(d, C, len(client_sets))
        acc = float((np.argmax(Xtest @ W, axis=1) == test.labels).mean())
        history.append(
            {
                "round": r + 1,
                "accuracy": acc,
                "cum_bytes": cum_bytes,
                "cum_seconds": time.monotonic() - t_start,
            }
        )
    return history
