"""Ingests capture batches, assigns URIs, stitches derivations, forwards records."""

from provtrace.tracker.core import IngestAck, IngestError, SpecConflict, TrackerConfig, TrackerCore
from provtrace.tracker.locators import normalize_locator

__all__ = [
    "IngestAck",
    "IngestError",
    "SpecConflict",
    "TrackerConfig",
    "TrackerCore",
    "normalize_locator",
]
