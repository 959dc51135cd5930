"""Parameterized provenance queries over the triple store."""

from provtrace.query.engine import NotFound, QueryDescriptor, QueryEngine

__all__ = ["NotFound", "QueryDescriptor", "QueryEngine"]
