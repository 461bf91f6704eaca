"""Networked authentication service: registry, audit log, feedback loop."""

from markguard.service.app import create_app, serve
from markguard.service.core import (
    DEFAULT_BAND,
    DEFAULT_PAYLOAD_LIMIT,
    TRADEOFF_BUDGETS,
    VALIDATION_SCORES_FILE,
    AuthRequestRecord,
    AuthService,
    FeedbackRecord,
    MalformedLabel,
    NoActiveModel,
    NoFeedback,
    NoValidationSet,
    PayloadTooLarge,
    ServiceError,
    ServiceSnapshot,
    UnknownModelVersion,
    UnknownRequest,
)
from markguard.service.store import AppendLog, ImageStore

__all__ = [
    "DEFAULT_BAND",
    "DEFAULT_PAYLOAD_LIMIT",
    "TRADEOFF_BUDGETS",
    "VALIDATION_SCORES_FILE",
    "AppendLog",
    "AuthRequestRecord",
    "AuthService",
    "FeedbackRecord",
    "ImageStore",
    "MalformedLabel",
    "NoActiveModel",
    "NoFeedback",
    "NoValidationSet",
    "PayloadTooLarge",
    "ServiceError",
    "ServiceSnapshot",
    "UnknownModelVersion",
    "UnknownRequest",
    "create_app",
    "serve",
]
