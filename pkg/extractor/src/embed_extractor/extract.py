"""Frozen ImageNet ResNet-18 penultimate-layer features for CIFAR-10/100.

The backbone runs in inference mode with no gradients; images go through the
backbone's published ImageNet preprocessing (resize to 224, ImageNet channel
statistics).  The 32x32 CIFAR images are upsampled accordingly — the source
material does not state a resize policy, so the choice is recorded in the
provenance sidecar written next to every FEMB file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn
from torchvision import models, transforms

DATASETS = {"cifar10": 10, "cifar100": 100}
SPLITS = ("train", "test")
EMBED_DIM = 512  # ResNet-18 penultimate layer

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
INPUT_SIZE = 224

PREPROCESSING_NOTE = (
    f"RGB, resized to {INPUT_SIZE}x{INPUT_SIZE} bilinear, scaled to [0,1], "
    f"normalized with ImageNet mean {IMAGENET_MEAN} / std {IMAGENET_STD}"
)


@dataclass(frozen=True)
class ExtractorConfig:
    dataset: str
    split: str
    output: str
    batch_size: int = 256
    device: str = "cpu"
    checkpoint: str = "torchvision/resnet18/IMAGENET1K_V1"

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ValueError(f"dataset must be one of {sorted(DATASETS)}, got {self.dataset!r}")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def n_classes(self) -> int:
        return DATASETS[self.dataset]


def build_backbone(pretrained: bool = True) -> nn.Module:
    """ResNet-18 with the classifier head removed: outputs the 512-d pooled
    penultimate features."""
    weights = models.ResNet18_Weights.IMAGENET1K_V1 if pretrained else None
    try:
        net = models.resnet18(weights=weights)
    except Exception as exc:  # checkpoint fetch can fail offline
        raise RuntimeError(f"could not obtain the pretrained checkpoint: {exc}") from exc
    net.fc = nn.Identity()
    net.eval()
    return net


def checkpoint_hash(model: nn.Module) -> str:
    """SHA-256 over the state dict in key order."""
    digest = hashlib.sha256()
    state = model.state_dict()
    for key in sorted(state):
        digest.update(key.encode())
        digest.update(state[key].cpu().numpy().tobytes())
    return digest.hexdigest()


def _transform():
    return transforms.Compose(
        [
            transforms.Resize(INPUT_SIZE),
            transforms.ToTensor(),
            transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
        ]
    )


def load_cifar(cfg: ExtractorConfig, root: str = "data"):
    """The official torchvision split; raises RuntimeError when the archive is
    neither cached nor downloadable."""
    from torchvision import datasets

    cls = datasets.CIFAR10 if cfg.dataset == "cifar10" else datasets.CIFAR100
    try:
        return cls(root=root, train=cfg.split == "train", download=True, transform=_transform())
    except Exception as exc:
        raise RuntimeError(f"could not obtain {cfg.dataset}/{cfg.split}: {exc}") from exc


def extract_features(model: nn.Module, dataset, batch_size: int, device: str = "cpu"):
    """Deterministic batched inference; features come back in dataset order."""
    if device != "cpu" and not torch.cuda.is_available():
        raise RuntimeError(f"device {device!r} is not available")
    model = model.to(device).eval()
    loader = torch.utils.data.DataLoader(
        dataset, batch_size=batch_size, shuffle=False, num_workers=0
    )
    feats, labels = [], []
    with torch.no_grad():
        for x, y in loader:
            out = model(x.to(device))
            feats.append(out.cpu().numpy().astype(np.float32))
            labels.append(np.asarray(y))
    return np.concatenate(feats, axis=0), np.concatenate(labels, axis=0)


def extract(cfg: ExtractorConfig, model: nn.Module = None, dataset=None, data_root: str = "data"):
    """Produce the FEMB file plus its provenance sidecar; returns both paths.

    `model` and `dataset` may be injected for testing; by default the
    pretrained backbone and the official CIFAR split are used."""
    from .femb import write_femb

    if model is None:
        model = build_backbone(pretrained=True)
    if dataset is None:
        dataset = load_cifar(cfg, root=data_root)
    features, labels = extract_features(model, dataset, cfg.batch_size, cfg.device)
    if features.shape[1] != EMBED_DIM:
        raise RuntimeError(
            f"backbone produced {features.shape[1]}-d features, expected {EMBED_DIM}"
        )
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_femb(out, features, labels, cfg.n_classes)

    sidecar = out.with_suffix(out.suffix + ".provenance.json")
    sidecar.write_text(
        json.dumps(
            {
                "dataset": cfg.dataset,
                "split": cfg.split,
                "sample_count": int(features.shape[0]),
                "dim": int(features.shape[1]),
                "n_classes": cfg.n_classes,
                "checkpoint": cfg.checkpoint,
                "checkpoint_sha256": checkpoint_hash(model),
                "preprocessing": PREPROCESSING_NOTE,
            },
            indent=2,
        )
        + "\n"
    )
    return out, sidecar
