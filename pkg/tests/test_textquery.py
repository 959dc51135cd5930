import pytest

from provtrace.store.pattern import PatternError, match
from provtrace.store.terms import Iri
from provtrace.store.textquery import QueryParseError, parse_query
from provtrace.store.triples import Triple, TripleStore

from oracles import brute_match, rows_key


@pytest.fixture()
def store():
    s = TripleStore()
    s.insert(
        [
            Triple(Iri("m1"), Iri("type"), Iri("Model")),
            Triple(Iri("m2"), Iri("type"), Iri("Model")),
            Triple(Iri("m1"), Iri("hasLoss"), 0.12),
            Triple(Iri("m2"), Iri("hasLoss"), 0.07),
        ]
    )
    return s


def run(store, text):
    return match(store, parse_query(text))


def test_select_where(store):
    rows = run(store, "SELECT ?m WHERE { ?m <type> <Model> }")
    assert rows_key(rows) == rows_key([{"m": Iri("m1")}, {"m": Iri("m2")}])
    assert rows_key(rows) == rows_key(brute_match(store.triples(), parse_query("SELECT ?m WHERE { ?m <type> <Model> }")))


def test_filter(store):
    rows = run(store, "SELECT ?m WHERE { ?m <hasLoss> ?l . FILTER(?l < 0.1) }")
    assert rows == [{"m": Iri("m2")}]


def test_aggregate_min(store):
    rows = run(store, "SELECT (MIN(?l) AS ?best) WHERE { ?m <type> <Model> . ?m <hasLoss> ?l }")
    assert rows == [{"best": 0.07}]


def test_aggregate_group_by(store):
    store.insert([Triple(Iri("m1"), Iri("hasLoss"), 0.2)])
    rows = run(
        store,
        "SELECT ?m (COUNT(?l) AS ?n) WHERE { ?m <hasLoss> ?l } GROUP BY ?m",
    )
    assert rows_key(rows) == rows_key([{"m": Iri("m1"), "n": 2}, {"m": Iri("m2"), "n": 1}])


def test_min_witness_projection(store):
    rows = run(store, "SELECT ?m (MIN(?l) AS ?best) WHERE { ?m <hasLoss> ?l }")
    assert rows == [{"m": Iri("m2"), "best": 0.07}]


def test_count_rejects_witness(store):
    with pytest.raises(PatternError):
        run(store, "SELECT ?m (COUNT(?l) AS ?n) WHERE { ?m <hasLoss> ?l }")


def test_limit(store):
    rows = run(store, "SELECT ?m WHERE { ?m <type> <Model> } LIMIT 1")
    assert len(rows) == 1


def test_star_projection(store):
    rows = run(store, "SELECT * WHERE { ?m <hasLoss> ?l . FILTER(?l > 0.1) }")
    assert rows == [{"m": Iri("m1"), "l": 0.12}]


def test_string_and_bool_literals():
    s = TripleStore()
    s.insert([Triple(Iri("a"), Iri("name"), "x y"), Triple(Iri("a"), Iri("flag"), True)])
    assert run(s, 'SELECT ?v WHERE { ?v <name> "x y" }') == [{"v": Iri("a")}]
    assert run(s, "SELECT ?v WHERE { ?v <flag> true }") == [{"v": Iri("a")}]


def test_case_insensitive_keywords(store):
    rows = run(store, "select ?m where { ?m <type> <Model> } limit 2")
    assert len(rows) == 2


@pytest.mark.parametrize(
    "bad",
    [
        "",
        "SELECT",
        "SELECT ?m",
        "SELECT ?m WHERE { ?m <type> }",
        "SELECT ?m WHERE { ?m <type> <Model> ",
        "SELECT WHERE { ?m <type> <Model> }",
        "SELECT ?m WHERE { ?m <type> <Model> } trailing",
        "SELECT ?m WHERE { ?m <type> <Model> } LIMIT -1",
        "SELECT ?m WHERE { FILTER(?l ~ 3) }",
        "SELECT (SUM(?l) AS ?x) WHERE { ?m <hasLoss> ?l }",
    ],
)
def test_parse_errors_carry_position(bad):
    with pytest.raises(QueryParseError) as err:
        parse_query(bad)
    assert err.value.position >= 0


def test_unbound_filter_var_is_pattern_error(store):
    with pytest.raises(PatternError):
        run(store, "SELECT ?m WHERE { ?m <type> <Model> . FILTER(?l < 1) }")
