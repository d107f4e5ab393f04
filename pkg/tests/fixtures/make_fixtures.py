"""Regenerates the bundled FEMB fixtures.  Run from the repository root:

    python3 tests/fixtures/make_fixtures.py

The outputs are deterministic; the checked-in files must match.

Two fixture families:

* blobs_*: axis-aligned Gaussian blobs (synth_blobs), used for accuracy,
  protocol, and communication-accounting checks.
* drift_*: Gaussian blobs whose class means share a strong common positive
  direction (cosine similarity ~0.9 between classes), mimicking the
  correlated, non-negative structure of real embedding vectors.  On these,
  a nearest-prototype decision rule is weak, which is what lets iterative
  averaging exhibit client drift under single-class partitioning.
"""

import numpy as np
from pathlib import Path

from fedhenet import EmbeddingDataset, save_femb, synth_blobs

HERE = Path(__file__).parent

TRAIN_SEED = 41
TEST_SEED = 42
MEAN_SEED = 123
DRIFT_CORR = 0.7
DRIFT_SEP = 8.0


def correlated_blobs(n_classes, dim, per_class, separation, seed):
    """Unit-covariance Gaussian blobs with correlated positive-orthant means."""
    mrng = np.random.default_rng(MEAN_SEED)
    shared = np.abs(mrng.normal(size=dim))
    shared /= np.linalg.norm(shared)
    means = []
    for _ in range(n_classes):
        own = np.abs(mrng.normal(size=dim))
        own /= np.linalg.norm(own)
        m = DRIFT_CORR * shared + (1.0 - DRIFT_CORR) * own
        means.append(separation * m / np.linalg.norm(m))
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for c in range(n_classes):
        rows.append(rng.normal(size=(per_class, dim)) + means[c])
        labels.extend([c] * per_class)
    return EmbeddingDataset(np.vstack(rows), np.asarray(labels), n_classes)


def main():
    train = synth_blobs(n_classes=10, dim=32, per_class=200, separation=2.5, seed=TRAIN_SEED)
    test = synth_blobs(n_classes=10, dim=32, per_class=50, separation=2.5, seed=TEST_SEED)
    save_femb(train, HERE / "blobs_train.femb")
    save_femb(test, HERE / "blobs_test.femb")

    dtrain = correlated_blobs(10, 32, 200, DRIFT_SEP, TRAIN_SEED)
    dtest = correlated_blobs(10, 32, 50, DRIFT_SEP, TEST_SEED)
    save_femb(dtrain, HERE / "drift_train.femb")
    save_femb(dtest, HERE / "drift_test.femb")
    for name in ["blobs_train", "blobs_test", "drift_train", "drift_test"]:
        print("wrote", HERE / f"{name}.femb")


if __name__ == "__main__":
    main()
