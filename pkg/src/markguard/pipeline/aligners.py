"""Aligners: normalize a detected mark into the canonical 224x224 frame.

Canonical pose convention: the generator's mark canvas scaled to fill the
canonical frame exactly (one global scale of 224/192), mark unrotated and
centered.  ``applied_transform`` maps source-image pixels (about the image
center) to canonical pixels (about the canonical center).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol

import cv2
import numpy as np

from markguard.geometry import AffineParams, decompose
from markguard.pipeline.types import (
    CANONICAL_SIZE,
    AlignedMark,
    AuthImage,
    DegenerateCrop,
    MarkDetection,
)

# saturation (max - min channel) above this is mark foreground
SAT_THRESHOLD = 40
_MIN_MASK_PIXELS = 50
_CANON_C = (CANONICAL_SIZE / 2.0, CANONICAL_SIZE / 2.0)


class Aligner(Protocol):
    def align(self, image: AuthImage, detection: MarkDetection) -> AlignedMark: ...


def _canvas_to_canonical_scale() -> float:
    from markguard.synthdata import MARK_CANVAS

    return CANONICAL_SIZE / MARK_CANVAS


@lru_cache(maxsize=4)
def _reference_mask_stats(threshold: int = SAT_THRESHOLD) -> tuple[float, float]:
    """(foreground area, principal-axis angle deg) of the nominal mark at
    generator scale 1.  The axis angle is a fixed trait of the emblem shape
    and must be subtracted from per-capture estimates."""
    from markguard.synthdata import NOMINAL_MARK, _canonical_mark

    rgba = _canonical_mark(NOMINAL_MARK, np.random.default_rng(0))
    rgb = rgba[:, :, :3].astype(np.int16)
    sat = rgb.max(axis=2) - rgb.min(axis=2)
    mask = ((sat > threshold) & (rgba[:, :, 3] > 128)).astype(np.uint8)
    mom = cv2.moments(mask, binaryImage=True)
    axis = 0.5 * math.atan2(2.0 * mom["mu11"], mom["mu20"] - mom["mu02"])
    return float(mom["m00"]), math.degrees(axis)


def _saturation_mask(pixels: np.ndarray, threshold: int) -> np.ndarray:
    rgb = pixels.astype(np.int16)
    sat = rgb.max(axis=2) - rgb.min(axis=2)
    return (sat > threshold).astype(np.uint8)


def _warp_to_canonical(image: AuthImage, matrix: np.ndarray) -> AlignedMark:
    warped = cv2.warpAffine(
        image.pixels,
        matrix[:2],
        (CANONICAL_SIZE, CANONICAL_SIZE),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_REPLICATE,
    )
    pixels = np.clip(warped.astype(np.float32) / 255.0, 0.0, 1.0)
    applied = decompose(
        matrix,
        src_center=(image.width / 2.0, image.height / 2.0),
        dst_center=_CANON_C,
    )
    return AlignedMark(pixels=pixels, applied_transform=applied)


def _clipped_crop(image: AuthImage, detection: MarkDetection, pad_frac: float):
    b = detection.bbox
    inter_w = min(b.x1, image.width) - max(b.x0, 0.0)
    inter_h = min(b.y1, image.height) - max(b.y0, 0.0)
    if inter_w <= 0 or inter_h <= 0 or (inter_w * inter_h) < 0.5 * b.area:
        raise DegenerateCrop("detection bbox maps mostly outside the image")
    box = b.padded(pad_frac, image.width, image.height)
    x0, y0 = int(math.floor(box.x0)), int(math.floor(box.y0))
    x1, y1 = int(math.ceil(box.x1)), int(math.ceil(box.y1))
    x0, y0 = max(0, x0), max(0, y0)
    x1, y1 = min(image.width, x1), min(image.height, y1)
    if x1 - x0 < 8 or y1 - y0 < 8:
        raise DegenerateCrop("detection bbox collapses to an unusable crop")
    return x0, y0, x1, y1


@dataclass(frozen=True)
class GeometricAligner:
    """Moment-based deskew: centroid centers the mark, the principal axis
    sets rotation, foreground area vs the nominal reference sets scale.

    The emblem is wider than tall, so its principal axis is well defined and
    placement rotations up to +-45 degrees resolve without ambiguity.
    """

    sat_threshold: int = SAT_THRESHOLD
    pad_frac: float = 0.10

    def align(self, image: AuthImage, detection: MarkDetection) -> AlignedMark:
        x0, y0, x1, y1 = _clipped_crop(image, detection, self.pad_frac)
        mask = _saturation_mask(image.pixels[y0:y1, x0:x1], self.sat_threshold)

        if int(mask.sum()) >= _MIN_MASK_PIXELS:
            ref_area, ref_axis = _reference_mask_stats(self.sat_threshold)
            mom = cv2.moments(mask, binaryImage=True)
            cx = mom["m10"] / mom["m00"] + x0
            cy = mom["m01"] / mom["m00"] + y0
            theta = 0.5 * math.atan2(2.0 * mom["mu11"], mom["mu20"] - mom["mu02"])
            theta_deg = math.degrees(theta) - ref_axis
            # axis is defined mod 180; fold the estimate into (-45, 45]
            while theta_deg > 45.0:
                theta_deg -= 90.0
            while theta_deg <= -45.0:
                theta_deg += 90.0
            est_scale = math.sqrt(mom["m00"] / ref_area)
        else:
            # featureless crop: fall back to bbox geometry, no deskew
            from markguard.synthdata import MARK_CANVAS

            cx, cy = detection.bbox.center
            theta_deg = 0.0
            est_scale = max(detection.bbox.width, detection.bbox.height) / MARK_CANVAS

        if not (math.isfinite(est_scale) and est_scale > 1e-3):
            raise DegenerateCrop("estimated mark scale collapsed")

        k = _canvas_to_canonical_scale() / est_scale
        matrix = AffineParams(rotation=-theta_deg, scale=k).matrix(
            src_center=(cx, cy), dst_center=_CANON_C
        )
        return _warp_to_canonical(image, matrix)


class PoseRegressor(Protocol):
    """Predicts (rotation_deg, log_scale, dx_px, dy_px) of a coarse crop's
    pose relative to canonical."""

    def predict_pose(self, pixels: np.ndarray) -> tuple[float, float, float, float]: ...


@dataclass(frozen=True)
class RegressorAligner:
    """Learned alignment: coarse bbox crop, then a trained regressor
    predicts the residual pose, which is inverted and composed so the
    source image is resampled exactly once."""

    regressor: PoseRegressor
    pad_frac: float = 0.04

    def _coarse_matrix(self, image: AuthImage, detection: MarkDetection) -> np.ndarray:
        x0, y0, x1, y1 = _clipped_crop(image, detection, self.pad_frac)
        side = max(x1 - x0, y1 - y0)
        if side <= 0:
            raise DegenerateCrop("empty detection bbox")
        k = CANONICAL_SIZE / side
        center = ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
        return AffineParams(scale=k).matrix(src_center=center, dst_center=_CANON_C)

    def align(self, image: AuthImage, detection: MarkDetection) -> AlignedMark:
        m0 = self._coarse_matrix(image, detection)
        coarse = cv2.warpAffine(
            image.pixels,
            m0[:2],
            (CANONICAL_SIZE, CANONICAL_SIZE),
            flags=cv2.INTER_LINEAR,
            borderMode=cv2.BORDER_REPLICATE,
        )
        rot, log_s, dx, dy = self.regressor.predict_pose(
            np.clip(coarse.astype(np.float32) / 255.0, 0.0, 1.0)
        )
        scale = math.exp(log_s)
        if not (math.isfinite(scale) and scale > 1e-3):
            raise DegenerateCrop("regressed scale collapsed")
        # the regressor reports the perturbation that produced the coarse
        # view; apply its inverse about the canonical center
        forward = AffineParams(rotation=rot, scale=scale, translation=(dx, dy))
        correction = forward.inverse().matrix(src_center=_CANON_C, dst_center=_CANON_C)
        return _warp_to_canonical(image, correction @ m0)


def alignment_residual(
    applied: AffineParams,
    generator: AffineParams,
    image_size: tuple[int, int],
    canvas_size: float,
) -> tuple[float, float, float]:
    """Residual pose after undoing a known generator placement.

    Returns (rotation_deg, translation_px, scale_ratio): the deviation of
    ``applied o generator`` from the ideal mark-canvas -> canonical map.
    Perfect alignment gives (0, 0, 1).
    """
    w, h = image_size
    a = applied.matrix(src_center=(w / 2.0, h / 2.0), dst_center=_CANON_C)
    g = generator.matrix(
        src_center=(canvas_size / 2.0, canvas_size / 2.0), dst_center=(w / 2.0, h / 2.0)
    )
    residual = decompose(
        a @ g, src_center=(canvas_size / 2.0, canvas_size / 2.0), dst_center=_CANON_C
    )
    ideal_scale = CANONICAL_SIZE / canvas_size
    return (
        residual.rotation,
        math.hypot(*residual.translation),
        residual.scale / ideal_scale,
    )
