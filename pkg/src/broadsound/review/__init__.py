"""Human review workflow: annotation journal and local HTTP service."""

from broadsound.review.store import (
    AnnotationStore,
    ERROR_CATEGORIES,
    ErrorAnnotation,
    ClassAnnotation,
)
from broadsound.review.service import ReviewService

__all__ = [
    "AnnotationStore",
    "ERROR_CATEGORIES",
    "ErrorAnnotation",
    "ClassAnnotation",
    "ReviewService",
]
