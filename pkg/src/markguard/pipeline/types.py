"""Core pipeline data types: captures, detections, aligned marks, scores."""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from markguard.decision import Verdict, VerdictLabel
from markguard.geometry import AffineParams, BBox

CANONICAL_SIZE = 224
MIN_IMAGE_SIDE = 64
MIN_DETECTION_AREA = 32 * 32


class PipelineError(Exception):
    """Base for recoverable pipeline failures with a machine-readable code."""

    code = "pipeline error"


class NoMarkFound(PipelineError):
    code = "no mark"


class DegenerateCrop(PipelineError):
    code = "degenerate crop"


class ModelUnavailable(PipelineError):
    code = "model unavailable"


class ImageDecodeError(ValueError):
    """Payload is not a decodable PNG/JPEG raster."""


class Venue(enum.Enum):
    RETAIL = "retail"
    CUSTOMS = "customs"
    WAREHOUSE = "warehouse"
    OUTDOOR = "outdoor"
    RETURNS_FACILITY = "returns_facility"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CaptureMeta:
    """Capture context. Carried through for audit, never fed to the model."""

    device_id: str
    venue: Venue = Venue.UNKNOWN
    captured_at: Optional[datetime] = None

    def to_json_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "venue": self.venue.value,
            "captured_at": None if self.captured_at is None else self.captured_at.isoformat(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CaptureMeta":
        ts = d.get("captured_at")
        return cls(
            device_id=d["device_id"],
            venue=Venue(d.get("venue", "unknown")),
            captured_at=None if ts is None else datetime.fromisoformat(ts),
        )


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True, eq=False)
class AuthImage:
    """An 8-bit RGB capture, height x width x 3."""

    pixels: np.ndarray
    capture_meta: Optional[CaptureMeta] = None

    def __post_init__(self):
        p = self.pixels
        if not (isinstance(p, np.ndarray) and p.dtype == np.uint8 and p.ndim == 3 and p.shape[2] == 3):
            raise ValueError("pixels must be an HxWx3 uint8 array")
        if p.shape[0] < MIN_IMAGE_SIDE or p.shape[1] < MIN_IMAGE_SIDE:
            raise ValueError(f"image sides must be >= {MIN_IMAGE_SIDE} px")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @classmethod
    def from_bytes(cls, data: bytes, capture_meta: Optional[CaptureMeta] = None) -> "AuthImage":
        try:
            with Image.open(io.BytesIO(data)) as im:
                if im.format not in ("PNG", "JPEG"):
                    raise ImageDecodeError(f"unsupported format: {im.format}")
                rgb = im.convert("RGB")
                arr = np.asarray(rgb, dtype=np.uint8)
        except (UnidentifiedImageError, OSError, SyntaxError) as exc:
            raise ImageDecodeError(f"cannot decode image: {exc}") from exc
        return cls(pixels=arr, capture_meta=capture_meta)

    @classmethod
    def from_file(cls, path, capture_meta: Optional[CaptureMeta] = None) -> "AuthImage":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), capture_meta)

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()


@dataclass(frozen=True)
class MarkDetection:
    """Located mark: bbox in source pixel coordinates plus match confidence."""

    bbox: BBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")
        if self.bbox.area < MIN_DETECTION_AREA:
            raise ValueError(f"detection bbox area must be >= {MIN_DETECTION_AREA} px^2")

    def validate_for(self, image: AuthImage) -> None:
        if not self.bbox.inside(image.width, image.height):
            raise ValueError("detection bbox extends outside the image")

    def to_json_dict(self) -> dict:
        return {"bbox": self.bbox.to_json_dict(), "confidence": self.confidence}

    @classmethod
    def from_json_dict(cls, d: dict) -> "MarkDetection":
        return cls(bbox=BBox.from_json_dict(d["bbox"]), confidence=d["confidence"])


@dataclass(frozen=True, eq=False)
class AlignedMark:
    """Canonical 224x224x3 crop in [0,1] plus the transform that produced it."""

    pixels: np.ndarray
    applied_transform: AffineParams

    def __post_init__(self):
        p = self.pixels
        expected = (CANONICAL_SIZE, CANONICAL_SIZE, 3)
        if not (isinstance(p, np.ndarray) and p.shape == expected):
            raise ValueError(f"aligned mark must have shape {expected}")
        if p.dtype != np.float32:
            raise ValueError("aligned mark must be float32")
        if float(p.min()) < 0.0 or float(p.max()) > 1.0:
            raise ValueError("aligned mark values must lie in [0, 1]")

    def as_image(self, capture_meta: Optional[CaptureMeta] = None) -> AuthImage:
        # Re-wrap as a capture, e.g. to test alignment idempotence.
        arr = np.clip(np.rint(self.pixels * 255.0), 0, 255).astype(np.uint8)
        return AuthImage(pixels=arr, capture_meta=capture_meta)


@dataclass(frozen=True)
class AuthScore:
    """Genuineness score in [0,1]; 1 means genuine."""

    value: float
    model_version: str

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("score must be in [0, 1]")

    def to_json_dict(self) -> dict:
        return {"value": self.value, "model_version": self.model_version}

    @classmethod
    def from_json_dict(cls, d: dict) -> "AuthScore":
        return cls(value=d["value"], model_version=d["model_version"])


@dataclass(frozen=True)
class AuthResult:
    """Final outcome: score, verdict, detection, and both version stamps.

    score and detection are absent when the pipeline rejected before
    scoring (no mark found, degenerate crop).
    """

    verdict: Verdict
    thresholds_version: str
    score: Optional[AuthScore] = None
    detection: Optional[MarkDetection] = None

    def __post_init__(self):
        if self.verdict.label is not VerdictLabel.REJECT:
            if self.score is None or self.detection is None:
                raise ValueError("accepted verdicts require a score and a detection")

    @property
    def model_version(self) -> Optional[str]:
        return None if self.score is None else self.score.model_version

    def to_json_dict(self) -> dict:
        return {
            "verdict": {"label": self.verdict.label.value, "reason": self.verdict.reason},
            "thresholds_version": self.thresholds_version,
            "score": None if self.score is None else self.score.to_json_dict(),
            "detection": None if self.detection is None else self.detection.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "AuthResult":
        v = d["verdict"]
        return cls(
            verdict=Verdict(VerdictLabel(v["label"]), reason=v.get("reason")),
            thresholds_version=d["thresholds_version"],
            score=None if d.get("score") is None else AuthScore.from_json_dict(d["score"]),
            detection=(
                None if d.get("detection") is None else MarkDetection.from_json_dict(d["detection"])
            ),
        )
