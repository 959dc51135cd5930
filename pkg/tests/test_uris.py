import pytest
from hypothesis import given, strategies as st

from provtrace.core.uris import UriError, make_uri, parse_uri, store_uri, transformation_uri


def test_value_uri_form():
    assert make_uri("pl", "wfe1", 3, "learning_rate", 0) == "pl:wfe1/t3/learning_rate/0"


def test_task_uri_form():
    assert make_uri("pl", "wfe1", 3) == "pl:wfe1/t3"


def test_determinism():
    a = make_uri("pl", "wfe1", 3, "learning_rate", 0)
    b = make_uri("pl", "wfe1", 3, "learning_rate", 0)
    assert a == b


def test_store_and_transformation_forms():
    assert store_uri("pl", "gpfs1") == "pl:store/gpfs1"
    assert transformation_uri("pl", "train", "1", "fit") == "pl:spec/train/1/fit"


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(namespace="", wf_exec_id="w", task_seq=0),
        dict(namespace="pl", wf_exec_id="", task_seq=0),
        dict(namespace="pl", wf_exec_id="w", task_seq=-1),
        dict(namespace="pl", wf_exec_id="w", task_seq=0, attr_name="a"),  # occurrence missing
        dict(namespace="pl", wf_exec_id="w", task_seq=0, occurrence=0),  # attr missing
        dict(namespace="pl", wf_exec_id="store", task_seq=0),  # reserved
        dict(namespace="pl", wf_exec_id="spec", task_seq=0),  # reserved
    ],
)
def test_invalid_arguments(kwargs):
    with pytest.raises(UriError):
        make_uri(**kwargs)


def test_escaping_keeps_injectivity():
    a = make_uri("pl", "w/1", 0, "a", 0)
    b = make_uri("pl", "w", 1, "a", 0)
    assert a != b
    parsed = parse_uri(a)
    assert parsed.wf_exec_id == "w/1"


component = st.text(min_size=1, max_size=12).filter(lambda s: s not in ("store", "spec"))


@given(ns=component, wfe=component, seq=st.integers(0, 10_000), attr=component, occ=st.integers(0, 99))
def test_round_trip(ns, wfe, seq, attr, occ):
    for uri in (make_uri(ns, wfe, seq), make_uri(ns, wfe, seq, attr, occ)):
        parts = parse_uri(uri)
        assert parts.format() == uri
    parts = parse_uri(make_uri(ns, wfe, seq, attr, occ))
    assert (parts.namespace, parts.wf_exec_id, parts.task_seq, parts.attr_name, parts.occurrence) == (
        ns,
        wfe,
        seq,
        attr,
        occ,
    )


@given(
    a=st.tuples(component, component, st.integers(0, 50), component, st.integers(0, 5)),
    b=st.tuples(component, component, st.integers(0, 50), component, st.integers(0, 5)),
)
def test_injectivity(a, b):
    ua = make_uri(*a)
    ub = make_uri(*b)
    if a != b:
        assert ua != ub
    else:
        assert ua == ub


def test_parse_rejects_garbage():
    for bad in ["", "nocolon", "pl:", "pl:w", "pl:w/x3", "pl:w/t3/attr", "pl:w/t3/a/b/c", "pl:store", "pl:spec/a/b"]:
        with pytest.raises(UriError):
            parse_uri(bad)
