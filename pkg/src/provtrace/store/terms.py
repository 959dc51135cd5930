"""Graph terms and the interning dictionary.

A term is an IRI or a literal (str, bool, int, float). Numbers are
canonicalized on the way in (integral floats become ints, non-finite
rejected) so numerically equal literals intern to the same id; booleans
are kept apart from 0/1 by tagging the dictionary key with the term kind.
"""

from __future__ import annotations

import math
from typing import Union


class Iri:
    """An IRI node, distinct from the string literal with the same text."""

    __slots__ = ("value",)

    def __init__(self, value: str):
        self.value = value

    def __eq__(self, other):
        return isinstance(other, Iri) and other.value == self.value

    def __hash__(self):
        return hash(("iri", self.value))

    def __repr__(self):
        return f"<{self.value}>"

    def __lt__(self, other):
        if not isinstance(other, Iri):
            return NotImplemented
        return self.value < other.value


Term = Union[Iri, str, bool, int, float]


def canon_term(term: Term) -> Term:
    if isinstance(term, Iri) or isinstance(term, (str, bool)):
        return term
    if isinstance(term, float):
        if not math.isfinite(term):
            raise ValueError(f"non-finite literal {term!r}")
        return int(term) if term.is_integer() else term
    if isinstance(term, int):
        return term
    raise TypeError(f"not a term: {term!r}")


def term_key(term: Term):
    """Hashable dictionary key; kind tag keeps IRIs, strings, and bools apart."""
    if isinstance(term, Iri):
        return ("i", term.value)
    if isinstance(term, bool):
        return ("b", term)
    if isinstance(term, (int, float)):
        return ("n", term)
    return ("s", term)


def sort_key(term: Term):
    """Total order across kinds: numbers numerically, strings/IRIs lexically."""
    if isinstance(term, Iri):
        return (0, term.value)
    if isinstance(term, bool):
        return (3, term)
    if isinstance(term, (int, float)):
        return (1, term)
    return (2, term)


def term_to_obj(term: Term):
    """JSON form: IRIs as {"@": text}, literals as bare scalars."""
    if isinstance(term, Iri):
        return {"@": term.value}
    return term


def term_from_obj(obj) -> Term:
    if isinstance(obj, dict):
        return Iri(obj["@"])
    return canon_term(obj)


def ntriples_term(term: Term) -> str:
    if isinstance(term, Iri):
        return f"<{term.value}>"
    if isinstance(term, bool):
        lit, dt = ("true" if term else "false"), "http://www.w3.org/2001/XMLSchema#boolean"
        return f'"{lit}"^^<{dt}>'
    if isinstance(term, int):
        return f'"{term}"^^<http://www.w3.org/2001/XMLSchema#integer>'
    if isinstance(term, float):
        return f'"{term!r}"^^<http://www.w3.org/2001/XMLSchema#double>'
    escaped = term.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r")
    return f'"{escaped}"'


class TermDict:
    """Bijective term <-> integer id map."""

    def __init__(self):
        self._by_key: dict[tuple, int] = {}
        self._by_id: list[Term] = []

    def __len__(self):
        return len(self._by_id)

    def intern(self, term: Term) -> int:
        term = canon_term(term)
        key = term_key(term)
        tid = self._by_key.get(key)
        if tid is None:
            tid = len(self._by_id)
            self._by_id.append(term)
            self._by_key[key] = tid
        return tid

    def lookup(self, term: Term):
        """Id for an existing term, or None if the term was never interned."""
        try:
            return self._by_key.get(term_key(canon_term(term)))
        except (TypeError, ValueError):
            return None

    def term(self, tid: int) -> Term:
        return self._by_id[tid]
