"""Basic graph pattern matching with filters and aggregates.

A pattern is a conjunction of triple patterns over constants and named
variables, optional comparison filters, and an optional aggregate. Join
order is picked greedily by index-based selectivity estimates; the result
set does not depend on that order.

Aggregate semantics: grouping keys are the group_by variables. count and
avg rows carry only group keys plus the aggregate column. min/max rows
additionally carry witness bindings: the remaining variables of a row that
attains the extremum (ties resolved by the smallest full row under the
term sort order, so results stay deterministic).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from provtrace.store.terms import Iri, Term, canon_term, sort_key, term_key
from provtrace.store.triples import TripleStore


class PatternError(ValueError):
    """Ill-formed pattern: unknown variables, bad aggregates, bad filters."""


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return f"?{self.name}"


TermOrVar = Union[Term, Var]


@dataclass(frozen=True)
class TriplePattern:
    s: TermOrVar
    p: TermOrVar
    o: TermOrVar

    def variables(self) -> set[str]:
        return {t.name for t in (self.s, self.p, self.o) if isinstance(t, Var)}


_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


@dataclass(frozen=True)
class Filter:
    lhs: TermOrVar
    op: str
    rhs: TermOrVar

    def variables(self) -> set[str]:
        return {t.name for t in (self.lhs, self.rhs) if isinstance(t, Var)}

    def evaluate(self, binding: dict[str, Term]) -> bool:
        lhs = binding[self.lhs.name] if isinstance(self.lhs, Var) else self.lhs
        rhs = binding[self.rhs.name] if isinstance(self.rhs, Var) else self.rhs
        if self.op in ("=", "!="):
            equal = term_key(lhs) == term_key(rhs)
            return equal if self.op == "=" else not equal
        if isinstance(lhs, Iri) or isinstance(rhs, Iri):
            return False
        if isinstance(lhs, bool) or isinstance(rhs, bool):
            return False
        if isinstance(lhs, str) != isinstance(rhs, str):
            return False  # ordering across literal kinds is undefined, not an error
        return _CMP[self.op](lhs, rhs)


@dataclass(frozen=True)
class Aggregate:
    op: str  # min | max | avg | count
    over: Var
    group_by: tuple[Var, ...] = ()
    as_name: Optional[str] = None

    @property
    def column(self) -> str:
        return self.as_name or f"{self.op}_{self.over.name}"


@dataclass
class Pattern:
    patterns: list[TriplePattern]
    filters: list[Filter] = field(default_factory=list)
    aggregate: Optional[Aggregate] = None
    projection: Optional[list[str]] = None  # variable names; None = all
    limit: Optional[int] = None


def _check(pattern: Pattern) -> None:
    if not pattern.patterns:
        raise PatternError("pattern needs at least one triple pattern")
    bound: set[str] = set()
    for tp in pattern.patterns:
        bound |= tp.variables()
    for f in pattern.filters:
        missing = f.variables() - bound
        if missing:
            raise PatternError(f"filter variable(s) {sorted(missing)} not bound by any triple pattern")
    agg = pattern.aggregate
    if agg:
        if agg.op not in ("min", "max", "avg", "count"):
            raise PatternError(f"unknown aggregate {agg.op!r}")
        if agg.over.name not in bound:
            raise PatternError(f"aggregate variable ?{agg.over.name} not bound by any triple pattern")
        for g in agg.group_by:
            if g.name not in bound:
                raise PatternError(f"group-by variable ?{g.name} not bound by any triple pattern")
    if pattern.projection is not None:
        agg_cols = set()
        if agg:
            agg_cols = {agg.column} | {g.name for g in agg.group_by}
        for name in pattern.projection:
            if name not in bound and name not in agg_cols:
                raise PatternError(f"projected variable ?{name} not bound by any triple pattern")


def _resolve(t: TermOrVar, binding: dict[str, Term]):
    if isinstance(t, Var):
        return binding.get(t.name)
    return t


def _join(store: TripleStore, patterns: list[TriplePattern], filters: list[Filter]) -> list[dict[str, Term]]:
    """Backtracking join; each step picks the cheapest remaining pattern."""

    results: list[dict[str, Term]] = []

    def filters_ready(binding: dict[str, Term], applied: set[int]) -> Optional[list[int]]:
        ready = []
        for i, f in enumerate(filters):
            if i in applied:
                continue
            if f.variables() <= set(binding):
                if not f.evaluate(binding):
                    return None
                ready.append(i)
        return ready

    def step(remaining: list[TriplePattern], binding: dict[str, Term], applied: set[int]) -> None:
        if not remaining:
            results.append(dict(binding))
            return
        best_i, best_cost = 0, None
        for i, tp in enumerate(remaining):
            cost = store.estimate(_resolve(tp.s, binding), _resolve(tp.p, binding), _resolve(tp.o, binding))
            if best_cost is None or cost < best_cost:
                best_i, best_cost = i, cost
        tp = remaining[best_i]
        rest = remaining[:best_i] + remaining[best_i + 1 :]
        s, p, o = _resolve(tp.s, binding), _resolve(tp.p, binding), _resolve(tp.o, binding)
        for triple in store.candidates(s, p, o):
            new = dict(binding)
            ok = True
            for slot, val in ((tp.s, triple.s), (tp.p, triple.p), (tp.o, triple.o)):
                if isinstance(slot, Var):
                    prev = new.get(slot.name)
                    if prev is None:
                        new[slot.name] = val
                    elif term_key(prev) != term_key(val):
                        ok = False
                        break
            if not ok:
                continue
            newly = filters_ready(new, applied)
            if newly is None:
                continue
            step(rest, new, applied | set(newly))

    for tp in patterns:
        for slot in (tp.s, tp.p, tp.o):
            if not isinstance(slot, Var):
                canon_term(slot)  # raise early on non-terms
    step(list(patterns), {}, set())
    return results


def _numeric(value: Term, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise PatternError(f"{where}: non-numeric value {value!r}")
    return value


def _aggregate(rows: list[dict[str, Term]], agg: Aggregate, all_vars: list[str]) -> list[dict[str, Term]]:
    groups: dict[tuple, list[dict[str, Term]]] = {}
    for row in rows:
        key = tuple(term_key(row[g.name]) for g in agg.group_by)
        groups.setdefault(key, []).append(row)
    out = []
    for group_rows in groups.values():
        head = {g.name: group_rows[0][g.name] for g in agg.group_by}
        if agg.op == "count":
            head[agg.column] = len(group_rows)
        elif agg.op == "avg":
            values = [_numeric(r[agg.over.name], "avg") for r in group_rows]
            head[agg.column] = sum(values) / len(values)
        else:
            ordered = sorted(
                group_rows,
                key=lambda r: tuple(sort_key(r[v]) for v in all_vars if v in r),
            )
            pick_key = lambda r: sort_key(r[agg.over.name])
            # min()/max() keep the first extremal row, i.e. the smallest full row
            chosen = min(ordered, key=pick_key) if agg.op == "min" else max(ordered, key=pick_key)
            head = dict(chosen)
            head[agg.column] = chosen[agg.over.name]
            for g in agg.group_by:
                head[g.name] = group_rows[0][g.name]
        out.append(head)
    out.sort(key=lambda r: tuple(sort_key(r[g.name]) for g in agg.group_by))
    return out


def match(store: TripleStore, pattern: Pattern) -> list[dict[str, Term]]:
    """All variable bindings satisfying the pattern (order not significant)."""
    _check(pattern)
    rows = _join(store, pattern.patterns, pattern.filters)
    if pattern.aggregate:
        all_vars = sorted({v for tp in pattern.patterns for v in tp.variables()})
        rows = _aggregate(rows, pattern.aggregate, all_vars)
    if pattern.projection is not None:
        projected = []
        seen = set()
        for row in rows:
            slim = {name: row[name] for name in pattern.projection if name in row}
            key = tuple(sorted((k, term_key(v)) for k, v in slim.items()))
            if key not in seen:
                seen.add(key)
                projected.append(slim)
        rows = projected
    if pattern.limit is not None:
        rows = rows[: pattern.limit]
    return rows
