"""Inference service: request flow, logs, HTTP API.

Import ``longimodel.service.core`` / ``longimodel.service.http`` for the
service and app factories; only the log records are re-exported here to
keep import cycles out of the composition root.
"""

from .logs import FeedbackLog, FeedbackReceipt, FeedbackRecord, PredictionLog, PredictionRecord, PredictionRequest

__all__ = [
    "FeedbackLog",
    "FeedbackReceipt",
    "FeedbackRecord",
    "PredictionLog",
    "PredictionRecord",
    "PredictionRequest",
]
