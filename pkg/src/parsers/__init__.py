"""Cohort manifest and session file parsers."""

from .cohort_parser import (
    CohortParser,
    MANIFEST_HEADER,
    SESSION_HEADER,
    MANIFEST_NAME,
)

__all__ = ["CohortParser", "MANIFEST_HEADER", "SESSION_HEADER", "MANIFEST_NAME"]
