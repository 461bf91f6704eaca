"""Affine transforms and boxes used across the capture pipeline.

Conventions
-----------
Points are (x, y) in pixel coordinates with y pointing down.  An
:class:`AffineParams` describes the map

    p_dst = dst_center + R(rotation) @ Shear(shear) @ (scale * (p_src - src_center)) + translation

i.e. rotation/shear/scale act about a caller-chosen source center, the result
is re-anchored at a destination center, and ``translation`` is an extra offset
in destination pixels.  Positive rotation turns the +x axis toward +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AffineParams:
    """Rotation / translation / scale / shear parameterization of a 2-D affine map."""

    rotation: float = 0.0  # degrees
    translation: tuple[float, float] = (0.0, 0.0)  # pixels, destination frame
    scale: float = 1.0
    shear: float = 0.0  # degrees

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def identity(cls) -> "AffineParams":
        return cls()

    def linear(self) -> np.ndarray:
        """2x2 linear part: R(rotation) @ Shear(shear) @ scale*I."""
        th = math.radians(self.rotation)
        rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        sh = np.array([[1.0, math.tan(math.radians(self.shear))], [0.0, 1.0]])
        return rot @ sh * self.scale

    def matrix(
        self,
        src_center: tuple[float, float] = (0.0, 0.0),
        dst_center: tuple[float, float] = (0.0, 0.0),
    ) -> np.ndarray:
        """Full 3x3 homogeneous matrix mapping source-frame to destination-frame pixels."""
        lin = self.linear()
        sc = np.asarray(src_center, dtype=float)
        dc = np.asarray(dst_center, dtype=float)
        t = dc + np.asarray(self.translation, dtype=float) - lin @ sc
        out = np.eye(3)
        out[:2, :2] = lin
        out[:2, 2] = t
        return out

    def inverse(self) -> "AffineParams":
        """Analytic inverse of the about-origin map.

        Exact for shear-free maps (the only kind the capture pipeline
        produces); with shear the family is not closed under inversion and
        the nearest representative is returned.
        """
        return decompose(np.linalg.inv(self.matrix()))

    def compose(self, inner: "AffineParams") -> "AffineParams":
        """self ∘ inner (apply ``inner`` first), both about the origin."""
        return decompose(self.matrix() @ inner.matrix())

    def to_json_dict(self) -> dict:
        return {
            "rotation": self.rotation,
            "translation": list(self.translation),
            "scale": self.scale,
            "shear": self.shear,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "AffineParams":
        return cls(
            rotation=d["rotation"],
            translation=tuple(d["translation"]),
            scale=d["scale"],
            shear=d.get("shear", 0.0),
        )


def decompose(
    matrix: np.ndarray,
    src_center: tuple[float, float] = (0.0, 0.0),
    dst_center: tuple[float, float] = (0.0, 0.0),
) -> AffineParams:
    """Recover AffineParams from a 3x3 homogeneous matrix.

    Inverse of :meth:`AffineParams.matrix` for the same pair of centers.
    Requires a positive-determinant linear part (no reflections).
    """
    lin = np.asarray(matrix, dtype=float)[:2, :2]
    det = float(np.linalg.det(lin))
    if det <= 0:
        raise ValueError(f"affine matrix must preserve orientation, det={det}")
    scale = math.sqrt(det)
    # lin/scale = R @ Shear; first column of that product is (cos th, sin th)
    rs = lin / scale
    rotation = math.degrees(math.atan2(rs[1, 0], rs[0, 0]))
    cos_t, sin_t = math.cos(math.radians(rotation)), math.sin(math.radians(rotation))
    # second column: (cos*tanK - sin, sin*tanK + cos)
    tan_k = cos_t * rs[0, 1] + sin_t * rs[1, 1]
    shear = math.degrees(math.atan(tan_k))
    sc = np.asarray(src_center, dtype=float)
    dc = np.asarray(dst_center, dtype=float)
    mapped = np.asarray(matrix, dtype=float) @ np.array([sc[0], sc[1], 1.0])
    translation = mapped[:2] - dc
    return AffineParams(
        rotation=rotation,
        translation=(float(translation[0]), float(translation[1])),
        scale=scale,
        shear=shear,
    )


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, half-open pixel extents [x0, x1) x [y0, y1)."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise ValueError(f"degenerate bbox {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def inside(self, width: float, height: float) -> bool:
        return self.x0 >= 0 and self.y0 >= 0 and self.x1 <= width and self.y1 <= height

    def iou(self, other: "BBox") -> float:
        ix0, iy0 = max(self.x0, other.x0), max(self.y0, other.y0)
        ix1, iy1 = min(self.x1, other.x1), min(self.y1, other.y1)
        if ix1 <= ix0 or iy1 <= iy0:
            return 0.0
        inter = (ix1 - ix0) * (iy1 - iy0)
        return inter / (self.area + other.area - inter)

    def padded(self, frac: float, width: float, height: float) -> "BBox":
        """Grow by ``frac`` of the larger side, clipped to the image."""
        pad = frac * max(self.width, self.height)
        return BBox(
            max(0.0, self.x0 - pad),
            max(0.0, self.y0 - pad),
            min(float(width), self.x1 + pad),
            min(float(height), self.y1 + pad),
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)

    def to_json_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}

    @classmethod
    def from_json_dict(cls, d: dict) -> "BBox":
        return cls(d["x0"], d["y0"], d["x1"], d["y1"])


def points_bbox(points: np.ndarray) -> BBox:
    """Tight bbox of an (N, 2) point array."""
    pts = np.asarray(points, dtype=float)
    return BBox(
        float(pts[:, 0].min()),
        float(pts[:, 1].min()),
        float(pts[:, 0].max()),
        float(pts[:, 1].max()),
    )
