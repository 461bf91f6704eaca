"""Authentication service: model registry, snapshot state, audit logs, metrics.

Concurrency model: the active configuration lives in one immutable
ServiceSnapshot; a request reads that reference exactly once, so the
(model_version, thresholds_version) pair it reports was always installed
together.  Mutations (activate, recalibrate, install) serialize on a lock
and publish by swapping the reference.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional

from markguard.decision import (
    DEFAULT_REJECTION_BUDGETS,
    CostMatrix,
    ScoredSet,
    ThresholdBand,
    TradeoffCurve,
    Truth,
    VerdictLabel,
    calibrate_band,
    tradeoff_curve,
)
from markguard.pipeline import (
    Aligner,
    AuthImage,
    AuthResult,
    CaptureMeta,
    GeometricAligner,
    Localizer,
    ModelHandle,
    TemplateLocalizer,
    authenticate,
)
from markguard.pipeline.types import utc_now
from markguard.service.store import AppendLog, ImageStore
from markguard.training import DatasetManifest, ManifestEntry, ModelArtifact, Split

DEFAULT_PAYLOAD_LIMIT = 10 * 1024 * 1024  # bytes
# band in effect before any calibration: the plain 0.5 rule
DEFAULT_BAND = ThresholdBand(0.5, 0.5, version="default-0.5")

VALIDATION_SCORES_FILE = "val_scores.csv"
# rejection budgets the threshold view plots
TRADEOFF_BUDGETS = DEFAULT_REJECTION_BUDGETS


class ServiceError(Exception):
    http_status = 500
    code = "internal error"


class PayloadTooLarge(ServiceError):
    http_status = 413
    code = "payload too large"


class NoActiveModel(ServiceError):
    http_status = 503
    code = "no active model"


class NoValidationSet(ServiceError):
    http_status = 503
    code = "no validation set"


class UnknownRequest(ServiceError):
    http_status = 404
    code = "unknown request"


class UnknownModelVersion(ServiceError):
    http_status = 404
    code = "unknown model version"


class MalformedLabel(ServiceError):
    http_status = 409
    code = "malformed label"


class NoFeedback(ServiceError):
    http_status = 404
    code = "no feedback"


@dataclass(frozen=True)
class ServiceSnapshot:
    """The unit of configuration: a loaded model paired with a band."""

    model: ModelHandle
    band: ThresholdBand

    @property
    def model_version(self) -> str:
        return self.model.version

    @property
    def thresholds_version(self) -> str:
        return self.band.version


@dataclass(frozen=True)
class AuthRequestRecord:
    request_id: str
    received_at: datetime
    capture_meta: Optional[CaptureMeta]
    result: AuthResult
    model_version: str
    thresholds_version: str
    image_path: str  # content-addressed, relative to the store directory

    def to_json_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "received_at": self.received_at.isoformat(),
            "capture_meta": None if self.capture_meta is None else self.capture_meta.to_json_dict(),
            "result": self.result.to_json_dict(),
            "model_version": self.model_version,
            "thresholds_version": self.thresholds_version,
            "image_path": self.image_path,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "AuthRequestRecord":
        meta = d.get("capture_meta")
        return cls(
            request_id=d["request_id"],
            received_at=datetime.fromisoformat(d["received_at"]),
            capture_meta=None if meta is None else CaptureMeta.from_json_dict(meta),
            result=AuthResult.from_json_dict(d["result"]),
            model_version=d["model_version"],
            thresholds_version=d["thresholds_version"],
            image_path=d["image_path"],
        )


@dataclass(frozen=True)
class FeedbackRecord:
    request_id: str
    expert_label: Truth
    submitted_at: datetime
    submitter: str

    def to_json_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "expert_label": self.expert_label.value,
            "submitted_at": self.submitted_at.isoformat(),
            "submitter": self.submitter,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FeedbackRecord":
        return cls(
            request_id=d["request_id"],
            expert_label=Truth(d["expert_label"]),
            submitted_at=datetime.fromisoformat(d["submitted_at"]),
            submitter=d["submitter"],
        )


class AuthService:
    """Single-tenant authentication service over an append-only store.

    All derived state (metrics counters, request index, latest feedback)
    is a fold over the two logs; a fresh instance on the same store
    directory replays them and reports identical metrics.
    """

    def __init__(
        self,
        store_dir,
        *,
        artifact_dir=None,
        payload_limit: int = DEFAULT_PAYLOAD_LIMIT,
        localizer: Optional[Localizer] = None,
        aligner: Optional[Aligner] = None,
    ):
        self.store_dir = Path(store_dir)
        self.payload_limit = payload_limit
        self.localizer = localizer if localizer is not None else TemplateLocalizer()
        self.aligner = aligner if aligner is not None else GeometricAligner()

        self.images = ImageStore(self.store_dir / "images")
        self.request_log = AppendLog(self.store_dir / "requests.jsonl")
        self.feedback_log = AppendLog(self.store_dir / "feedback.jsonl")

        self._mutate = threading.Lock()  # serializes configuration swaps
        self._state = threading.Lock()  # guards the counters and indexes below
        self._snapshot: Optional[ServiceSnapshot] = None
        self._registry: dict[str, ModelArtifact] = {}
        self._validation_files: dict[str, Path] = {}  # version -> stored val scores
        self._validation: Optional[ScoredSet] = None

        self._verdict_counts = {label.value: 0 for label in VerdictLabel}
        self._feedback_count = 0
        # request_id -> (verdict label value, image file name), in arrival order
        self._requests: dict[str, tuple[str, str]] = {}
        self._feedback_latest: dict[str, Truth] = {}

        if artifact_dir is not None:
            self.scan_artifacts(artifact_dir)
        self._replay()

    # -- registry ---------------------------------------------------------

    def scan_artifacts(self, artifact_dir) -> None:
        """Register every model artifact saved under ``artifact_dir``.

        An artifact directory may carry the run's validation scores
        (``val_scores.csv``); activating that model installs them.
        """
        root = Path(artifact_dir)
        for meta_path in sorted(root.glob("*/meta.json")):
            artifact = ModelArtifact.load(meta_path.parent)
            self.register_artifact(artifact)
            scores = meta_path.parent / VALIDATION_SCORES_FILE
            if scores.exists():
                with self._mutate:
                    self._validation_files[artifact.meta.version] = scores

    def register_artifact(self, artifact: ModelArtifact) -> None:
        with self._mutate:
            self._registry[artifact.meta.version] = artifact

    def registered_models(self) -> list[dict]:
        with self._mutate:
            registry = dict(self._registry)
            snapshot = self._snapshot
        active = None if snapshot is None else snapshot.model_version
        return [
            {
                "version": version,
                "architecture": art.meta.architecture,
                "weight_count": art.meta.weight_count,
                "active": version == active,
            }
            for version, art in sorted(registry.items())
        ]

    def activate_model(self, version: str) -> ServiceSnapshot:
        """Load a registered artifact and publish it with the current band."""
        with self._mutate:
            artifact = self._registry.get(version)
            if artifact is None:
                raise UnknownModelVersion(f"model version {version!r} is not registered")
            handle = artifact.to_handle()
            band = DEFAULT_BAND if self._snapshot is None else self._snapshot.band
            snapshot = ServiceSnapshot(model=handle, band=band)
            self._snapshot = snapshot
            scores = self._validation_files.get(version)
            if scores is not None:
                self._validation = ScoredSet.from_csv(scores)
            return snapshot

    def install_snapshot(self, model: ModelHandle, band: ThresholdBand) -> ServiceSnapshot:
        """Publish an explicit (model, band) pair as one atomic snapshot."""
        snapshot = ServiceSnapshot(model=model, band=band)
        with self._mutate:
            self._snapshot = snapshot
        return snapshot

    @property
    def snapshot(self) -> Optional[ServiceSnapshot]:
        return self._snapshot

    # -- validation set and thresholds -------------------------------------

    def install_validation(self, scored: ScoredSet) -> None:
        """Designate the scored validation set used by recalibration."""
        with self._mutate:
            self._validation = scored

    def load_validation(self, path) -> None:
        self.install_validation(ScoredSet.from_csv(path))

    def recalibrate(self, costs: CostMatrix) -> ThresholdBand:
        """Calibrate a band on the validation set and publish it atomically."""
        with self._mutate:
            if self._validation is None:
                raise NoValidationSet("no validation scores installed")
            if self._snapshot is None:
                raise NoActiveModel("activate a model before recalibrating")
            band = calibrate_band(self._validation, costs)
            self._snapshot = ServiceSnapshot(model=self._snapshot.model, band=band)
            return band

    def tradeoff(self) -> TradeoffCurve:
        with self._mutate:
            if self._validation is None:
                raise NoValidationSet("no validation scores installed")
            scored = self._validation
        return tradeoff_curve(scored, TRADEOFF_BUDGETS)

    # -- request handling ---------------------------------------------------

    def handle_authenticate(
        self, data: bytes, capture_meta: Optional[CaptureMeta] = None
    ) -> AuthRequestRecord:
        """Decode, run the pipeline under the current snapshot, persist."""
        if len(data) > self.payload_limit:
            raise PayloadTooLarge(f"payload of {len(data)} bytes exceeds {self.payload_limit}")
        snapshot = self._snapshot  # single read: the request's whole world
        if snapshot is None:
            raise NoActiveModel("no model has been activated")
        image = AuthImage.from_bytes(data, capture_meta)
        image_path = self.images.put(data)
        result = authenticate(image, snapshot.model, snapshot.band, self.localizer, self.aligner)
        record = AuthRequestRecord(
            request_id=uuid.uuid4().hex,
            received_at=utc_now(),
            capture_meta=capture_meta,
            result=result,
            model_version=snapshot.model_version,
            thresholds_version=snapshot.thresholds_version,
            image_path=image_path,
        )
        with self._state:
            self.request_log.append(record.to_json_dict())
            self._index_request(record.to_json_dict())
        return record

    def record_feedback(self, request_id: str, expert_label: str, submitter: str) -> FeedbackRecord:
        try:
            label = Truth(expert_label)
        except ValueError:
            raise MalformedLabel(f"expert_label must be one of genuine/counterfeit, got {expert_label!r}")
        with self._state:
            if request_id not in self._requests:
                raise UnknownRequest(f"no authentication request {request_id!r}")
            record = FeedbackRecord(
                request_id=request_id,
                expert_label=label,
                submitted_at=utc_now(),
                submitter=submitter,
            )
            self.feedback_log.append(record.to_json_dict())
            self._index_feedback(record.to_json_dict())
        return record

    # -- derived state ------------------------------------------------------

    def _index_request(self, d: dict) -> None:
        self._verdict_counts[d["result"]["verdict"]["label"]] += 1
        self._requests[d["request_id"]] = (d["result"]["verdict"]["label"], d["image_path"])

    def _index_feedback(self, d: dict) -> None:
        self._feedback_count += 1
        self._feedback_latest[d["request_id"]] = Truth(d["expert_label"])

    def _replay(self) -> None:
        with self._state:
            for d in self.request_log.records():
                self._index_request(d)
            for d in self.feedback_log.records():
                self._index_feedback(d)

    def snapshot_metrics(self) -> dict:
        """Counters and rates; a pure fold over the audit logs."""
        with self._state:
            counts = dict(self._verdict_counts)
            feedback_count = self._feedback_count
            latest = dict(self._feedback_latest)
            verdicts = {rid: v for rid, (v, _) in self._requests.items()}
        total = sum(counts.values())
        rejected = counts[VerdictLabel.REJECT.value]
        matched = judged = 0
        for rid, label in latest.items():
            verdict = verdicts[rid]
            if verdict == VerdictLabel.REJECT.value:
                continue  # agreement is defined over committed verdicts only
            judged += 1
            matched += verdict == label.value.upper()
        snapshot = self._snapshot
        return {
            "requests_total": total,
            "verdicts": counts,
            "rejection_rate": rejected / total if total else 0.0,
            "feedback_total": feedback_count,
            "feedback_agreement": matched / judged if judged else None,
            "active_model_version": None if snapshot is None else snapshot.model_version,
            "active_thresholds_version": None if snapshot is None else snapshot.thresholds_version,
        }

    # -- retraining export ----------------------------------------------------

    def export_retraining_manifest(self) -> DatasetManifest:
        """Expert-labeled request images as a train-split manifest.

        Latest feedback per request wins; every record stays in the log.
        The export is a pure function of the logs, so re-exporting without
        new feedback yields an identical manifest.
        """
        with self._state:
            latest = dict(self._feedback_latest)
            requests = dict(self._requests)
        if not latest:
            raise NoFeedback("no feedback has been recorded")
        entries = []
        for rid, (_, image_path) in requests.items():  # arrival order
            label = latest.get(rid)
            if label is None:
                continue
            entries.append(
                ManifestEntry(
                    path=f"images/{image_path}",
                    label=label,
                    split=Split.TRAIN,
                    source="feedback",
                )
            )
        return DatasetManifest(entries=tuple(entries), seed=0, base_dir=str(self.store_dir))
