"""Aligned-dataset loading and train-time augmentation.

Loading runs the real geometric aligner over ground-truth detections (the
corpus records carry exact boxes), then caches the canonical crops as uint8
so repeated training runs on one corpus skip the align step.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Optional

import cv2
import numpy as np

from markguard.decision import Truth
from markguard.geometry import AffineParams
from markguard.pipeline.aligners import Aligner, GeometricAligner
from markguard.pipeline.types import (
    CANONICAL_SIZE,
    AlignedMark,
    AuthImage,
    MarkDetection,
)
from markguard.training.manifest import DatasetManifest, Split

if TYPE_CHECKING:  # synthdata imports the manifest module; keep runtime one-way
    from markguard.synthdata import SynthRecord

_CENTER = (CANONICAL_SIZE / 2.0, CANONICAL_SIZE / 2.0)


@dataclass(frozen=True)
class AugConfig:
    """Affine and brightness jitter magnitudes; zero magnitudes mean identity."""

    rotation_deg: float = 20.0
    translate_frac: float = 0.10
    scale_range: tuple[float, float] = (0.8, 1.2)
    brightness_jitter: float = 0.1
    enabled: bool = True

    def __post_init__(self):
        lo, hi = self.scale_range
        if not 0.0 < lo <= hi:
            raise ValueError("scale_range must satisfy 0 < min <= max")
        if min(self.rotation_deg, self.translate_frac, self.brightness_jitter) < 0:
            raise ValueError("augmentation magnitudes must be >= 0")

    @classmethod
    def identity(cls) -> "AugConfig":
        return cls(0.0, 0.0, (1.0, 1.0), 0.0)

    def to_json_dict(self) -> dict:
        return {
            "rotation_deg": self.rotation_deg,
            "translate_frac": self.translate_frac,
            "scale_range": list(self.scale_range),
            "brightness_jitter": self.brightness_jitter,
            "enabled": self.enabled,
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "AugConfig":
        # missing keys fall back to the dataclass defaults, like GenConfig
        base = cls()
        sr = d.get("scale_range", base.scale_range)
        return cls(
            rotation_deg=float(d.get("rotation_deg", base.rotation_deg)),
            translate_frac=float(d.get("translate_frac", base.translate_frac)),
            scale_range=(float(sr[0]), float(sr[1])),
            brightness_jitter=float(d.get("brightness_jitter", base.brightness_jitter)),
            enabled=bool(d.get("enabled", base.enabled)),
        )


def augment(mark: AlignedMark, cfg: AugConfig, rng_seed: int) -> AlignedMark:
    """Label-preserving random affine + brightness jitter within cfg.

    The recorded applied_transform is untouched: augmentation perturbs the
    view the classifier sees, not the pose ground truth.
    """
    if not cfg.enabled:
        return mark
    rng = np.random.default_rng(rng_seed)
    rot = float(rng.uniform(-cfg.rotation_deg, cfg.rotation_deg))
    t = cfg.translate_frac * CANONICAL_SIZE
    tx = float(rng.uniform(-t, t))
    ty = float(rng.uniform(-t, t))
    scale = float(rng.uniform(cfg.scale_range[0], cfg.scale_range[1]))
    gain = 1.0 + float(rng.uniform(-cfg.brightness_jitter, cfg.brightness_jitter))
    if rot == 0.0 and tx == 0.0 and ty == 0.0 and scale == 1.0 and gain == 1.0:
        return mark
    warp = AffineParams(rotation=rot, translation=(tx, ty), scale=scale)
    out = cv2.warpAffine(
        mark.pixels,
        warp.matrix(src_center=_CENTER, dst_center=_CENTER)[:2],
        (CANONICAL_SIZE, CANONICAL_SIZE),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_REPLICATE,
    )
    out = np.clip(out * gain, 0.0, 1.0).astype(np.float32)
    return AlignedMark(pixels=out, applied_transform=mark.applied_transform)


@dataclass(frozen=True, eq=False)
class SplitArrays:
    """One split's canonical crops (uint8, NHWC) and labels (1 = genuine)."""

    pixels: np.ndarray
    labels: np.ndarray
    paths: tuple[str, ...]

    def __post_init__(self):
        if len(self.pixels) != len(self.labels) or len(self.labels) != len(self.paths):
            raise ValueError("pixels, labels and paths must have equal length")

    def __len__(self) -> int:
        return len(self.paths)

    def mark(self, i: int) -> AlignedMark:
        px = (self.pixels[i].astype(np.float32) / 255.0).clip(0.0, 1.0)
        return AlignedMark(pixels=px, applied_transform=AffineParams.identity())


def detection_from_record(record: "SynthRecord", image: AuthImage) -> MarkDetection:
    b = record.true_bbox
    x0 = max(0.0, b.x0)
    y0 = max(0.0, b.y0)
    x1 = min(float(image.width), b.x1)
    y1 = min(float(image.height), b.y1)
    return MarkDetection(bbox=type(b)(x0, y0, x1, y1), confidence=1.0)


def load_aligned_dataset(
    manifest: DatasetManifest,
    aligner: Optional[Aligner] = None,
    records: Optional[list["SynthRecord"]] = None,
) -> dict[Split, SplitArrays]:
    """Align every manifest image and bundle per-split arrays.

    Detections come from the corpus ground-truth records (records.jsonl next
    to the manifest unless passed explicitly); alignment itself is the real
    geometric path, so the classifier trains on what the pipeline produces.
    """
    from markguard.synthdata import read_records

    if aligner is None:
        aligner = GeometricAligner()
    if records is None:
        rec_path = Path(manifest.base_dir) / "records.jsonl"
        if not rec_path.exists():
            raise FileNotFoundError(
                f"no ground-truth records at {rec_path}; pass records explicitly"
            )
        records = read_records(rec_path)
    by_path = {r.path: r for r in records}

    out: dict[Split, SplitArrays] = {}
    for split in Split:
        entries = manifest.split(split)
        pixels = np.zeros((len(entries), CANONICAL_SIZE, CANONICAL_SIZE, 3), dtype=np.uint8)
        labels = np.zeros(len(entries), dtype=np.float32)
        paths = []
        for i, entry in enumerate(entries):
            record = by_path.get(entry.path)
            if record is None:
                raise KeyError(f"manifest path {entry.path!r} has no ground-truth record")
            image = AuthImage.from_file(manifest.resolve(entry))
            aligned = aligner.align(image, detection_from_record(record, image))
            pixels[i] = np.clip(np.rint(aligned.pixels * 255.0), 0, 255).astype(np.uint8)
            labels[i] = 1.0 if entry.label is Truth.GENUINE else 0.0
            paths.append(entry.path)
        out[split] = SplitArrays(pixels=pixels, labels=labels, paths=tuple(paths))
    return out
