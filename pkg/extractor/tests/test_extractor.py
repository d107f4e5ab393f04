"""Extractor tests run fully offline: a seeded randomly-initialized ResNet-18
stands in for the pretrained checkpoint (identical architecture, so the 512-d
output contract and all format properties hold), and a small in-memory image
set stands in for CIFAR."""

import json

import numpy as np
import pytest
import torch
from torch import nn
from torchvision import models

from embed_extractor import (
    EMBED_DIM,
    ExtractorConfig,
    checkpoint_hash,
    extract,
    extract_features,
    femb_file_bytes,
    write_femb,
)
from embed_extractor.extract import _transform
from fedhenet import load_femb


class ArrayImageDataset(torch.utils.data.Dataset):
    """(uint8 HWC image, label) pairs through the real preprocessing chain."""

    def __init__(self, images, labels):
        from PIL import Image

        self.images = [Image.fromarray(img) for img in images]
        self.labels = list(labels)
        self.transform = _transform()

    def __len__(self):
        return len(self.images)

    def __getitem__(self, i):
        return self.transform(self.images[i]), self.labels[i]


@pytest.fixture(scope="module")
def backbone():
    torch.manual_seed(0)
    net = models.resnet18(weights=None)
    net.fc = nn.Identity()
    net.eval()
    return net


@pytest.fixture(scope="module")
def tiny_cifar():
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(20, 32, 32, 3), dtype=np.uint8)
    labels = np.concatenate([np.arange(10), rng.integers(0, 10, 10)])
    return ArrayImageDataset(images, labels)


def _cfg(tmp_path, **over):
    defaults = dict(dataset="cifar10", split="test", output=str(tmp_path / "out.femb"),
                    batch_size=8)
    defaults.update(over)
    return ExtractorConfig(**defaults)


def test_output_dim_is_512(backbone, tiny_cifar):
    feats, labels = extract_features(backbone, tiny_cifar, batch_size=8)
    assert feats.shape == (20, EMBED_DIM)
    assert labels.tolist() == tiny_cifar.labels


def test_file_size_matches_header_arithmetic(backbone, tiny_cifar, tmp_path):
    cfg = _cfg(tmp_path)
    femb, _ = extract(cfg, model=backbone, dataset=tiny_cifar)
    assert femb.stat().st_size == femb_file_bytes(20, EMBED_DIM)
    # the documented example shape: header + N*4 + N*512*4
    assert femb_file_bytes(10000, 512) == 23 + 10000 * 4 + 10000 * 512 * 4


def test_output_validates_against_primary_loader(backbone, tiny_cifar, tmp_path):
    cfg = _cfg(tmp_path)
    femb, _ = extract(cfg, model=backbone, dataset=tiny_cifar)
    ds = load_femb(femb)
    assert ds.data.shape == (20, EMBED_DIM)
    assert ds.n_classes == 10
    assert ds.labels.tolist() == tiny_cifar.labels


def test_deterministic_bitwise(backbone, tiny_cifar, tmp_path):
    a, _ = extract(_cfg(tmp_path, output=str(tmp_path / "a.femb")), backbone, tiny_cifar)
    b, _ = extract(_cfg(tmp_path, output=str(tmp_path / "b.femb")), backbone, tiny_cifar)
    assert a.read_bytes() == b.read_bytes()


def test_batch_size_does_not_change_output(backbone, tiny_cifar, tmp_path):
    a, _ = extract(_cfg(tmp_path, output=str(tmp_path / "a.femb"), batch_size=4),
                   backbone, tiny_cifar)
    b, _ = extract(_cfg(tmp_path, output=str(tmp_path / "b.femb"), batch_size=20),
                   backbone, tiny_cifar)
    va, vb = load_femb(a), load_femb(b)
    assert np.allclose(va.data, vb.data, atol=1e-5)


def test_provenance_sidecar(backbone, tiny_cifar, tmp_path):
    cfg = _cfg(tmp_path)
    _, sidecar = extract(cfg, model=backbone, dataset=tiny_cifar)
    meta = json.loads(sidecar.read_text())
    assert meta["dim"] == EMBED_DIM and meta["sample_count"] == 20
    assert meta["checkpoint_sha256"] == checkpoint_hash(backbone)
    assert "224" in meta["preprocessing"] and "ImageNet" in meta["preprocessing"]


def test_no_gradients_leak(backbone, tiny_cifar):
    feats, _ = extract_features(backbone, tiny_cifar, batch_size=8)
    assert all(not p.requires_grad or p.grad is None for p in backbone.parameters())
    assert feats.dtype == np.float32


@pytest.mark.parametrize(
    "kw",
    [
        dict(dataset="mnist"),
        dict(split="val"),
        dict(batch_size=0),
    ],
)
def test_config_validation(tmp_path, kw):
    with pytest.raises(ValueError):
        _cfg(tmp_path, **kw)


def test_cifar100_class_count(tmp_path):
    assert _cfg(tmp_path, dataset="cifar100").n_classes == 100


def test_writer_rejects_bad_labels(tmp_path):
    with pytest.raises(ValueError):
        write_femb(tmp_path / "x.femb", np.zeros((2, 4), np.float32), np.array([0, 5]), 3)
