import random

import pytest

from provtrace.store.pattern import Aggregate, Filter, Pattern, PatternError, TriplePattern, Var, match
from provtrace.store.terms import Iri
from provtrace.store.triples import Triple, TripleStore

from oracles import brute_match, rows_key

M1, M2 = Iri("m1"), Iri("m2")
TYPE, MODEL, HAS_LOSS = Iri("type"), Iri("Model"), Iri("hasLoss")


def model_store() -> TripleStore:
    store = TripleStore()
    store.insert(
        [
            Triple(M1, TYPE, MODEL),
            Triple(M2, TYPE, MODEL),
            Triple(M1, HAS_LOSS, 0.12),
            Triple(M2, HAS_LOSS, 0.07),
        ]
    )
    return store


def test_insert_set_semantics():
    store = model_store()
    assert len(store) == 4
    again = store.insert([Triple(M1, TYPE, MODEL)])
    assert again == 0
    assert len(store) == 4


def test_numeric_literal_identity():
    store = TripleStore()
    assert store.insert([Triple(M1, HAS_LOSS, 1.0)]) == 1
    assert store.insert([Triple(M1, HAS_LOSS, 1)]) == 0  # 1.0 and 1 are the same number
    assert store.insert([Triple(M1, HAS_LOSS, True)]) == 1  # booleans are not numbers


def test_match_two_patterns():
    # frozen from the enumeration oracle over this 4-triple store
    store = model_store()
    pattern = Pattern(patterns=[TriplePattern(Var("m"), TYPE, MODEL), TriplePattern(Var("m"), HAS_LOSS, Var("l"))])
    rows = match(store, pattern)
    assert rows_key(rows) == rows_key([{"m": M1, "l": 0.12}, {"m": M2, "l": 0.07}])
    assert rows_key(rows) == rows_key(brute_match(store.triples(), pattern))


def test_match_aggregate_min_with_witness():
    store = model_store()
    pattern = Pattern(
        patterns=[TriplePattern(Var("m"), TYPE, MODEL), TriplePattern(Var("m"), HAS_LOSS, Var("l"))],
        aggregate=Aggregate(op="min", over=Var("l")),
    )
    rows = match(store, pattern)
    assert len(rows) == 1
    assert rows[0]["min_l"] == 0.07
    assert rows[0]["m"] == M2  # witness
    assert rows_key(rows) == rows_key(brute_match(store.triples(), pattern))


def test_match_no_matches_empty():
    store = model_store()
    rows = match(store, Pattern(patterns=[TriplePattern(Var("m"), TYPE, Iri("Dataset"))]))
    assert rows == []


def test_unbound_aggregate_variable_is_error():
    store = model_store()
    with pytest.raises(PatternError):
        match(
            store,
            Pattern(patterns=[TriplePattern(Var("m"), TYPE, MODEL)], aggregate=Aggregate(op="min", over=Var("zz"))),
        )


def test_unbound_filter_variable_is_error():
    store = model_store()
    with pytest.raises(PatternError):
        match(
            store,
            Pattern(patterns=[TriplePattern(Var("m"), TYPE, MODEL)], filters=[Filter(Var("l"), "<", 1)]),
        )


def test_filter_comparisons():
    store = model_store()
    pattern = Pattern(
        patterns=[TriplePattern(Var("m"), HAS_LOSS, Var("l"))],
        filters=[Filter(Var("l"), "<", 0.1)],
    )
    rows = match(store, pattern)
    assert rows == [{"m": M2, "l": 0.07}]


def test_insert_then_match_monotonic():
    store = model_store()
    pattern = Pattern(patterns=[TriplePattern(Var("m"), TYPE, MODEL)])
    before = rows_key(match(store, pattern))
    store.insert([Triple(Iri("m3"), TYPE, MODEL)])
    after = rows_key(match(store, pattern))
    assert set(map(tuple, before)) <= set(map(tuple, after))


def test_traverse_chain_backward():
    store = TripleStore()
    derived = Iri("derivedFrom")
    chain = [Iri(x) for x in ("m", "d1", "d2", "raw")]
    store.insert([Triple(chain[i], derived, chain[i + 1]) for i in range(3)])
    sub = store.traverse(Iri("m"), derived, direction="out", transitive=True)
    assert sub.exists
    assert {n.value for n in sub.nodes} == {"m", "d1", "d2", "raw"}
    assert len(sub.edges) == 3


def test_traverse_cycle_terminates():
    store = TripleStore()
    p = Iri("next")
    store.insert([Triple(Iri("a"), p, Iri("b")), Triple(Iri("b"), p, Iri("a"))])
    sub = store.traverse(Iri("a"), p, direction="out", transitive=True)
    assert {n.value for n in sub.nodes} == {"a", "b"}


def test_traverse_stop_types():
    from provtrace.vocab import TYPE as VTYPE

    store = TripleStore()
    derived = Iri("derivedFrom")
    chain = [Iri(x) for x in ("m", "d1", "raw", "beyond")]
    store.insert([Triple(chain[i], derived, chain[i + 1]) for i in range(3)])
    store.insert([Triple(Iri("raw"), VTYPE, Iri("RawFile"))])
    sub = store.traverse(Iri("m"), derived, direction="out", transitive=True, stop_types={Iri("RawFile")})
    assert {n.value for n in sub.nodes} == {"m", "d1", "raw"}  # raw included, not expanded


def test_traverse_unknown_start():
    store = model_store()
    sub = store.traverse(Iri("ghost"), TYPE, direction="out")
    assert not sub.exists
    assert sub.nodes == []


def test_traverse_order_insensitive():
    edges = [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("d", "e")]
    p = Iri("next")
    expected = None
    for seed in range(5):
        store = TripleStore()
        shuffled = edges[:]
        random.Random(seed).shuffle(shuffled)
        store.insert([Triple(Iri(x), p, Iri(y)) for x, y in shuffled])
        nodes = {n.value for n in store.traverse(Iri("a"), p, direction="out").nodes}
        if expected is None:
            expected = nodes
        assert nodes == expected


def test_index_consistency_after_interleaved_inserts():
    store = TripleStore()
    rng = random.Random(7)
    for _ in range(40):
        batch = [
            Triple(Iri(f"s{rng.randrange(10)}"), Iri(f"p{rng.randrange(4)}"), rng.choice([Iri("o1"), 3, "x", True]))
            for _ in range(rng.randrange(1, 8))
        ]
        store.insert(batch)
    assert store.check_indexes()


def test_durability_round_trip(tmp_path):
    path = tmp_path / "store"
    store = TripleStore(path)
    store.insert([Triple(M1, TYPE, MODEL), Triple(M1, HAS_LOSS, 0.5)])
    store.close()
    again = TripleStore(path)
    assert len(again) == 2
    assert Triple(M1, HAS_LOSS, 0.5) in again
    again.close()


def test_reader_follows_writer(tmp_path):
    path = tmp_path / "store"
    writer = TripleStore(path)
    reader = TripleStore(path, read_only=True)
    writer.insert([Triple(M1, TYPE, MODEL)])
    assert len(reader) == 0
    reader.refresh()
    assert len(reader) == 1
    writer.insert([Triple(M2, TYPE, MODEL)])
    reader.refresh()
    assert len(reader) == 2
    with pytest.raises(PermissionError):
        reader.insert([Triple(M1, TYPE, MODEL)])
    writer.close()


def test_snapshot_compaction(tmp_path):
    path = tmp_path / "store"
    writer = TripleStore(path)
    writer.insert([Triple(M1, TYPE, MODEL), Triple(M2, TYPE, MODEL)])
    writer.snapshot()
    writer.insert([Triple(M1, HAS_LOSS, 0.1)])
    writer.close()
    again = TripleStore(path)
    assert len(again) == 3
    again.close()


def test_ntriples_export():
    store = model_store()
    text = store.to_ntriples()
    assert '<m2> <hasLoss> "0.07"^^<http://www.w3.org/2001/XMLSchema#double> .' in text
    assert text.count(" .") == 4
