"""Seeded random stores, patterns, and text queries for oracle-equivalence tests."""

from __future__ import annotations

import random

from provtrace.store.pattern import Aggregate, Filter, Pattern, TriplePattern, Var
from provtrace.store.terms import Iri
from provtrace.store.triples import Triple


def random_triples(rng: random.Random, n: int, n_subjects=None, n_preds=None) -> list[Triple]:
    n_subjects = n_subjects or max(2, n // 4)
    n_preds = n_preds or rng.randint(1, 6)
    literals = [rng.randint(0, 20), round(rng.uniform(0, 1), 3), "alpha", "beta", True, rng.randint(0, 9)]
    out = []
    for _ in range(n):
        s = Iri(f"s{rng.randrange(n_subjects)}")
        p = Iri(f"p{rng.randrange(n_preds)}")
        if rng.random() < 0.5:
            o = Iri(f"s{rng.randrange(n_subjects)}")
        else:
            o = rng.choice(literals)
        out.append(Triple(s, p, o))
    return out


def random_pattern(rng: random.Random, triples: list[Triple], max_patterns=4, force_selective=False) -> Pattern:
    """A pattern whose variables chain, biased toward terms that occur in the store."""
    n_patterns = rng.randint(1, max_patterns)
    var_names = ["a", "b", "c", "d", "e"]
    used_vars: list[str] = []

    def pick_term(position: int):
        if triples and rng.random() < 0.7:
            t = rng.choice(triples)
            return (t.s, t.p, t.o)[position]
        if position == 1:
            return Iri(f"p{rng.randrange(6)}")
        return rng.choice([Iri(f"s{rng.randrange(8)}"), rng.randint(0, 20), "alpha", False])

    def slot(position: int, must_const: bool):
        if not must_const and rng.random() < 0.45:
            if used_vars and rng.random() < 0.6:
                name = rng.choice(used_vars)
            else:
                name = var_names[len(used_vars) % len(var_names)] + str(len(used_vars))
                used_vars.append(name)
            return Var(name)
        return pick_term(position)

    patterns = []
    for _ in range(n_patterns):
        # keep at least one constant per pattern on big stores so the oracle stays tractable
        const_slot = rng.randrange(3) if force_selective else -1
        patterns.append(
            TriplePattern(
                slot(0, const_slot == 0),
                slot(1, const_slot == 1),
                slot(2, const_slot == 2),
            )
        )
    bound = sorted({v for tp in patterns for v in tp.variables()})

    filters = []
    if bound and rng.random() < 0.4:
        lhs = Var(rng.choice(bound))
        op = rng.choice(["<", "<=", ">", ">=", "=", "!="])
        rhs = rng.choice([rng.randint(0, 20), round(rng.uniform(0, 1), 2), "alpha", Var(rng.choice(bound))])
        filters.append(Filter(lhs, op, rhs))

    aggregate = None
    if bound and rng.random() < 0.3:
        op = rng.choice(["min", "max", "avg", "count"])
        group = []
        if len(bound) > 1 and rng.random() < 0.5:
            group = [Var(rng.choice(bound))]
        aggregate = Aggregate(op=op, over=Var(rng.choice(bound)), group_by=tuple(group))

    projection = None
    if bound and aggregate is None and rng.random() < 0.4:
        projection = sorted(rng.sample(bound, rng.randint(1, len(bound))))

    limit = None
    if rng.random() < 0.15 and aggregate is None and projection is None:
        limit = rng.randint(0, 5)

    return Pattern(patterns=patterns, filters=filters, aggregate=aggregate, projection=projection, limit=limit)


def has_nonnumeric_avg(pattern: Pattern, rows) -> bool:
    agg = pattern.aggregate
    if not agg or agg.op != "avg":
        return False
    for row in rows:
        v = row.get(agg.over.name)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return True
    return False
