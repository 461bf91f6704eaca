"""Capture-to-verdict pipeline: localize, align, score, decide."""

from markguard.pipeline.aligners import (
    Aligner,
    GeometricAligner,
    RegressorAligner,
    alignment_residual,
)
from markguard.pipeline.localizers import (
    DEFAULT_CONFIDENCE_FLOOR,
    Localizer,
    OracleLocalizer,
    TemplateLocalizer,
)
from markguard.pipeline.run import ModelHandle, authenticate, score_mark
from markguard.pipeline.types import (
    CANONICAL_SIZE,
    AlignedMark,
    AuthImage,
    AuthResult,
    AuthScore,
    CaptureMeta,
    DegenerateCrop,
    ImageDecodeError,
    MarkDetection,
    ModelUnavailable,
    NoMarkFound,
    PipelineError,
    Venue,
)

__all__ = [
    "CANONICAL_SIZE",
    "DEFAULT_CONFIDENCE_FLOOR",
    "AlignedMark",
    "Aligner",
    "AuthImage",
    "AuthResult",
    "AuthScore",
    "CaptureMeta",
    "DegenerateCrop",
    "GeometricAligner",
    "ImageDecodeError",
    "Localizer",
    "MarkDetection",
    "ModelHandle",
    "ModelUnavailable",
    "NoMarkFound",
    "OracleLocalizer",
    "PipelineError",
    "RegressorAligner",
    "TemplateLocalizer",
    "Venue",
    "alignment_residual",
    "authenticate",
    "score_mark",
]
