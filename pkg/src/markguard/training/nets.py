"""Network registry: desk-scale trainable backbones plus reference entries.

The reference architectures carry metadata only (their layer and weight
counts); training them requires pretrained weights and the full corpus, so
building one raises until a desk-scale builder is registered for it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import torch
from torch import nn


class UnknownArchitecture(KeyError):
    """Architecture key is unregistered or has no desk-scale builder."""


def weight_count(net: nn.Module) -> int:
    return sum(p.numel() for p in net.parameters())


def layer_count(net: nn.Module) -> int:
    """Number of modules that own parameters directly."""
    return sum(
        1 for m in net.modules() if any(True for _ in m.parameters(recurse=False))
    )


class SmallConv(nn.Module):
    """Compact convolutional scorer for canonical 224x224 marks.

    Input is average-pooled 4x first; the mark's class signal (hue shift,
    stroke/aspect offsets) is global, so the pooled 56x56 view keeps it
    while cutting compute for single-core training.  GroupNorm keeps
    batch-size independence and determinism.
    """

    def __init__(self, out_dim: int = 1):
        super().__init__()
        self.features = nn.Sequential(
            nn.AvgPool2d(4),
            nn.Conv2d(3, 16, 3, stride=2, padding=1),
            nn.GroupNorm(4, 16),
            nn.ReLU(inplace=True),
            nn.Conv2d(16, 32, 3, stride=2, padding=1),
            nn.GroupNorm(8, 32),
            nn.ReLU(inplace=True),
            nn.Conv2d(32, 64, 3, stride=2, padding=1),
            nn.GroupNorm(8, 64),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(1),
        )
        self.head = nn.Linear(64, out_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = self.features(x).flatten(1)
        out = self.head(z)
        return out.squeeze(1) if out.shape[1] == 1 else out


class SmallAttn(nn.Module):
    """Compact attention scorer: patch tokens over the pooled mark plus two
    transformer blocks."""

    def __init__(self, dim: int = 64, blocks: int = 2):
        super().__init__()
        self.pool = nn.AvgPool2d(4)
        self.patch = nn.Conv2d(3, dim, kernel_size=8, stride=8)
        self.pos = nn.Parameter(torch.zeros(1, 49, dim))
        layer = nn.TransformerEncoderLayer(
            d_model=dim,
            nhead=4,
            dim_feedforward=dim * 2,
            dropout=0.0,
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=blocks, enable_nested_tensor=False
        )
        self.norm = nn.LayerNorm(dim)
        self.head = nn.Linear(dim, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        t = self.patch(self.pool(x)).flatten(2).transpose(1, 2)
        t = self.encoder(t + self.pos)
        return self.head(self.norm(t.mean(dim=1))).squeeze(1)


class PoseRegressor(nn.Module):
    """Predicts the normalized pose (rotation, log-scale, dx, dy) of a
    coarsely cropped mark relative to canonical."""

    def __init__(self):
        super().__init__()
        self.features = nn.Sequential(
            nn.AvgPool2d(2),
            nn.Conv2d(3, 16, 3, stride=2, padding=1),
            nn.GroupNorm(4, 16),
            nn.ReLU(inplace=True),
            nn.Conv2d(16, 32, 3, stride=2, padding=1),
            nn.GroupNorm(8, 32),
            nn.ReLU(inplace=True),
            nn.Conv2d(32, 64, 3, stride=2, padding=1),
            nn.GroupNorm(8, 64),
            nn.ReLU(inplace=True),
            nn.Conv2d(64, 64, 3, stride=2, padding=1),
            nn.GroupNorm(8, 64),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(2),
        )
        self.head = nn.Linear(64 * 4, 4)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x).flatten(1))


@dataclass(frozen=True)
class ArchSpec:
    name: str
    kind: str  # "classifier" or "regressor"
    builder: Optional[Callable[[], nn.Module]]
    ref_layer_count: Optional[int] = None
    ref_weight_count: Optional[int] = None

    @property
    def trainable(self) -> bool:
        return self.builder is not None


_REGISTRY: dict[str, ArchSpec] = {}


def register(spec: ArchSpec) -> None:
    _REGISTRY[spec.name] = spec


def get_spec(name: str) -> ArchSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownArchitecture(f"unregistered architecture: {name!r}") from None


def build(name: str) -> nn.Module:
    spec = get_spec(name)
    if spec.builder is None:
        raise UnknownArchitecture(
            f"architecture {name!r} is a reference entry without a desk-scale builder"
        )
    return spec.builder()


def registered(kind: Optional[str] = None, trainable_only: bool = False) -> list[str]:
    names = []
    for name, spec in _REGISTRY.items():
        if kind is not None and spec.kind != kind:
            continue
        if trainable_only and not spec.trainable:
            continue
        names.append(name)
    return names


register(ArchSpec("small-conv", "classifier", SmallConv))
register(ArchSpec("small-attn", "classifier", SmallAttn))
register(ArchSpec("pose-regressor", "regressor", PoseRegressor))

# Reference rows: metadata for the published architecture line-up.
for _name, _layers, _weights in (
    ("ConvNext-small", 50, 50_000_000),
    ("ConvNext-base", 50, 89_000_000),
    ("Swim-transformer base", 12, 88_000_000),
    ("Twins-SVT-base", 12, 56_000_000),
    ("Twins-SVT-large", 12, 99_000_000),
    ("Twins-PCPVT-large", 12, 76_000_000),
    ("ViT-S", 12, 22_000_000),
    ("ViT-L", 24, 307_000_000),
    ("AntiCounterfeit", 380, 133_000_000),
):
    register(ArchSpec(_name, "classifier", None, _layers, _weights))
