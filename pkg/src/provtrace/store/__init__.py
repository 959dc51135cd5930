"""Embedded triple store: interned terms, SPO/POS/OSP indexes, patterns, text queries."""

from provtrace.store.terms import Iri, Term, term_from_obj, term_to_obj
from provtrace.store.triples import Triple, TripleStore, Subgraph
from provtrace.store.pattern import Aggregate, Filter, Pattern, PatternError, TriplePattern, Var
from provtrace.store.textquery import QueryParseError, parse_query

__all__ = [
    "Aggregate",
    "Filter",
    "Iri",
    "Pattern",
    "PatternError",
    "QueryParseError",
    "Subgraph",
    "Term",
    "Triple",
    "TriplePattern",
    "TripleStore",
    "Var",
    "parse_query",
    "term_from_obj",
    "term_to_obj",
]
