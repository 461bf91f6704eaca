"""Mark localizers: ground-truth lookup and template matching.

Both return the mark's canvas-extent bbox (emblem plus canonical margin) so
that a capture which is exactly a canonical crop localizes to its full frame.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import cv2
import numpy as np

from markguard.geometry import BBox
from markguard.pipeline.types import AuthImage, MarkDetection, NoMarkFound

DEFAULT_CONFIDENCE_FLOOR = 0.3


class Localizer(Protocol):
    def localize(self, image: AuthImage) -> MarkDetection: ...


def _pixel_key(pixels: np.ndarray) -> str:
    return hashlib.sha256(pixels.tobytes()).hexdigest()


@dataclass(frozen=True)
class OracleLocalizer:
    """Looks detections up from generator metadata, keyed by pixel content.

    Stand-in for a trained detector when evaluating on the synthetic corpus;
    returns the recorded bbox with confidence 1.0 and NoMarkFound for any
    image it has never seen.
    """

    index: dict  # pixel sha256 -> BBox

    @classmethod
    def from_records(cls, records: Sequence, base_dir) -> "OracleLocalizer":
        base = Path(base_dir)
        index = {}
        for rec in records:
            img = AuthImage.from_file(base / rec.path)
            index[_pixel_key(img.pixels)] = rec.true_bbox
        return cls(index=index)

    def localize(self, image: AuthImage) -> MarkDetection:
        bbox = self.index.get(_pixel_key(image.pixels))
        if bbox is None:
            raise NoMarkFound("image has no generator metadata")
        clipped = BBox(
            max(0.0, bbox.x0),
            max(0.0, bbox.y0),
            min(float(image.width), bbox.x1),
            min(float(image.height), bbox.y1),
        )
        return MarkDetection(bbox=clipped, confidence=1.0)


def _gray(pixels: np.ndarray) -> np.ndarray:
    return cv2.cvtColor(pixels, cv2.COLOR_RGB2GRAY).astype(np.float32)


class TemplateLocalizer:
    """Normalized cross-correlation against the genuine mark over a
    scale/rotation grid.  Confidence is the best correlation clipped to
    [0, 1]; below the floor the capture is unusable and NoMarkFound raises.
    """

    def __init__(
        self,
        confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
        scales: Sequence[float] = (0.68, 0.76, 0.84, 0.92, 1.00, 1.08, 1.16),
        rotations_deg: Sequence[float] = (-24, -18, -12, -6, 0, 6, 12, 18, 24),
    ):
        if not 0.0 <= confidence_floor <= 1.0:
            raise ValueError("confidence floor must be in [0, 1]")
        self.confidence_floor = confidence_floor
        self.scales = tuple(scales)
        self.rotations_deg = tuple(rotations_deg)
        self._templates = _build_templates(self.scales, self.rotations_deg)

    def localize(self, image: AuthImage) -> MarkDetection:
        scene = _gray(image.pixels)
        best: Optional[tuple[float, BBox]] = None
        for tmpl in self._templates:
            th, tw = tmpl.shape
            if th > scene.shape[0] or tw > scene.shape[1]:
                continue
            res = cv2.matchTemplate(scene, tmpl, cv2.TM_CCOEFF_NORMED)
            res = np.nan_to_num(res, nan=-1.0)
            _, r, _, loc = cv2.minMaxLoc(res)
            if best is None or r > best[0]:
                x, y = loc
                best = (float(r), BBox(float(x), float(y), float(x + tw), float(y + th)))
        confidence = 0.0 if best is None else min(1.0, max(0.0, best[0]))
        if best is None or confidence < self.confidence_floor:
            raise NoMarkFound(f"best template correlation {confidence:.3f} below floor")
        return MarkDetection(bbox=best[1], confidence=confidence)


def _build_templates(scales, rotations_deg) -> list[np.ndarray]:
    # Local import: synthdata provides the nominal emblem raster.
    from markguard.geometry import AffineParams
    from markguard.synthdata import MARK_CANVAS, NOMINAL_MARK, _canonical_mark

    rgba = _canonical_mark(NOMINAL_MARK, np.random.default_rng(0))
    base_gray = 200.0
    out = []
    c = MARK_CANVAS / 2.0
    for rot in rotations_deg:
        # render into the rotated canvas' axis-aligned extent, matching the
        # bbox convention of the generator metadata at every rotation
        rad = np.deg2rad(rot)
        side = int(np.ceil(MARK_CANVAS * (abs(np.cos(rad)) + abs(np.sin(rad)))))
        m = AffineParams(rotation=rot).matrix(
            src_center=(c, c), dst_center=(side / 2.0, side / 2.0)
        )[:2]
        rotated = cv2.warpAffine(
            rgba, m, (side, side), flags=cv2.INTER_LINEAR, borderValue=(0, 0, 0, 0)
        )
        alpha = rotated[:, :, 3:4].astype(np.float32) / 255.0
        comp = base_gray * (1.0 - alpha) + rotated[:, :, :3].astype(np.float32) * alpha
        gray = cv2.cvtColor(comp.astype(np.uint8), cv2.COLOR_RGB2GRAY).astype(np.float32)
        for s in scales:
            size = max(8, int(round(side * s)))
            out.append(cv2.resize(gray, (size, size), interpolation=cv2.INTER_AREA))
    return out
