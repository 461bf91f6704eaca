"""Pipeline composition: localize, align, score, decide."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from markguard.decision import (
    REASON_DEGENERATE_CROP,
    REASON_NO_MARK,
    ThresholdBand,
    Verdict,
    VerdictLabel,
    decide,
)
from markguard.pipeline.aligners import Aligner
from markguard.pipeline.localizers import Localizer
from markguard.pipeline.types import (
    AlignedMark,
    AuthImage,
    AuthResult,
    AuthScore,
    DegenerateCrop,
    ModelUnavailable,
    NoMarkFound,
)


@dataclass(frozen=True)
class ModelHandle:
    """A scoring function stamped with its model version.

    ``scorer`` maps a canonical 224x224x3 float raster to a scalar in
    [0, 1].  A handle created by :meth:`unavailable` represents a version
    that is registered but cannot be loaded; scoring it raises.
    """

    version: str
    scorer: Optional[Callable[[np.ndarray], float]]

    @classmethod
    def unavailable(cls, version: str) -> "ModelHandle":
        return cls(version=version, scorer=None)

    @property
    def loaded(self) -> bool:
        return self.scorer is not None


def score_mark(mark: AlignedMark, model: ModelHandle) -> AuthScore:
    if not model.loaded:
        raise ModelUnavailable(f"model version {model.version!r} is not loaded")
    value = float(model.scorer(mark.pixels))
    return AuthScore(value=value, model_version=model.version)


def authenticate(
    image: AuthImage,
    model: ModelHandle,
    band: ThresholdBand,
    localizer: Localizer,
    aligner: Aligner,
) -> AuthResult:
    """Full capture-to-verdict run.

    Localization and alignment failures surface as REJECT verdicts with
    machine-readable reasons rather than exceptions: the capture was
    unusable, which is an outcome, not an error.
    """
    try:
        detection = localizer.localize(image)
    except NoMarkFound:
        return AuthResult(
            verdict=Verdict(VerdictLabel.REJECT, reason=REASON_NO_MARK),
            thresholds_version=band.version,
        )
    try:
        mark = aligner.align(image, detection)
    except DegenerateCrop:
        return AuthResult(
            verdict=Verdict(VerdictLabel.REJECT, reason=REASON_DEGENERATE_CROP),
            thresholds_version=band.version,
            detection=detection,
        )
    score = score_mark(mark, model)
    return AuthResult(
        verdict=decide(score.value, band),
        thresholds_version=band.version,
        score=score,
        detection=detection,
    )
