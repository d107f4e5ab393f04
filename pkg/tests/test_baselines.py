import numpy as np
import pytest

from conftest import random_dataset
from fedhenet import InputError, PartitionScheme, PartitionSpec, partition, synth_blobs
from fedhenet.baselines import (
    BaselineConfig,
    LinearHead,
    fedavg_round,
    local_train,
    round_payload_bytes,
    run_baseline,
)
from fedhenet.federation import ENVELOPE_OVERHEAD


def _plan(ds, K, scheme=PartitionScheme.IID, seed=0, alpha=1.0):
    return partition(ds, PartitionSpec(scheme=scheme, client_count=K, seed=seed, alpha=alpha))


def test_fedprox_mu_zero_equals_fedavg():
    train = synth_blobs(n_classes=3, dim=4, per_class=40, separation=2.0, seed=0)
    test = synth_blobs(n_classes=3, dim=4, per_class=10, separation=2.0, seed=1)
    plan = _plan(train, 3)
    avg = run_baseline(train, test, plan, BaselineConfig(algorithm="fedavg", rounds=3, seed=5))
    prox = run_baseline(
        train, test, plan, BaselineConfig(algorithm="fedprox", mu=0.0, rounds=3, seed=5)
    )
    assert [r["accuracy"] for r in avg] == [r["accuracy"] for r in prox]


def test_fedprox_huge_mu_pins_to_global():
    rng = np.random.default_rng(0)
    ds = random_dataset(rng, m=60, n=5, C=3)
    W_global = rng.normal(size=(6, 3))
    head = local_train(
        LinearHead(W_global.copy()),
        ds,
        BaselineConfig(algorithm="fedprox", mu=1e9, learning_rate=1e-10),
        W_global,
    )
    assert np.linalg.norm(head.W - W_global) <= 1e-3


def test_local_train_deterministic():
    rng = np.random.default_rng(1)
    ds = random_dataset(rng, m=50, n=4, C=2)
    cfg = BaselineConfig(seed=3)
    W0 = np.zeros((5, 2))
    a = local_train(LinearHead(W0.copy()), ds, cfg, W0, round_idx=2, client_idx=1)
    b = local_train(LinearHead(W0.copy()), ds, cfg, W0, round_idx=2, client_idx=1)
    assert np.array_equal(a.W, b.W)
    c = local_train(LinearHead(W0.copy()), ds, cfg, W0, round_idx=2, client_idx=0)
    assert not np.array_equal(a.W, c.W)


def test_weighted_average():
    a = LinearHead(np.zeros((3, 2)))
    b = LinearHead(np.ones((3, 2)))
    avg = fedavg_round([a, b], [1, 3])
    assert np.allclose(avg.W, 0.75)


def test_average_of_identical_heads_unchanged():
    W = np.random.default_rng(2).normal(size=(4, 3))
    avg = fedavg_round([LinearHead(W.copy()) for _ in range(5)], [7] * 5)
    assert np.allclose(avg.W, W)


def test_fedavg_converges_on_separable_blobs():
    train = synth_blobs(n_classes=3, dim=4, per_class=100, separation=8.0, seed=3)
    test = synth_blobs(n_classes=3, dim=4, per_class=30, separation=8.0, seed=4)
    hist = run_baseline(
        train, test, _plan(train, 3),
        BaselineConfig(rounds=10, learning_rate=0.1, batch_size=16),
    )
    assert hist[-1]["accuracy"] >= 0.95
    assert hist[-1]["accuracy"] >= hist[0]["accuracy"]


def test_round_payload_arithmetic():
    d, C, K, R = 513, 10, 10, 10
    per_message = 9 + d * C * 8 + ENVELOPE_OVERHEAD
    assert round_payload_bytes(d, C, K) == 2 * K * per_message
    train = synth_blobs(n_classes=2, dim=3, per_class=20, separation=1.0, seed=0)
    test = synth_blobs(n_classes=2, dim=3, per_class=5, separation=1.0, seed=1)
    hist = run_baseline(train, test, _plan(train, 2), BaselineConfig(rounds=R))
    assert hist[-1]["cum_bytes"] == R * round_payload_bytes(4, 2, 2)


def test_history_shape():
    train = synth_blobs(n_classes=2, dim=3, per_class=20, separation=1.0, seed=0)
    test = synth_blobs(n_classes=2, dim=3, per_class=5, separation=1.0, seed=1)
    hist = run_baseline(train, test, _plan(train, 2), BaselineConfig(rounds=4))
    assert [r["round"] for r in hist] == [1, 2, 3, 4]
    assert all(r["cum_seconds"] >= 0 for r in hist)


@pytest.mark.parametrize(
    "kw",
    [
        dict(algorithm="fedsgd"),
        dict(rounds=0),
        dict(local_epochs=0),
        dict(learning_rate=0.0),
        dict(batch_size=0),
        dict(mu=-0.1),
    ],
)
def test_config_validation(kw):
    with pytest.raises(InputError):
        BaselineConfig(**kw)


def test_dimension_mismatch():
    rng = np.random.default_rng(4)
    ds = random_dataset(rng, m=20, n=4, C=2)
    with pytest.raises(InputError):
        local_train(LinearHead(np.zeros((3, 2))), ds, BaselineConfig(), np.zeros((3, 2)))
