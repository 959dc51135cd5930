"""Record <-> triple mapping.

One record expands to: task typing (base class, stage subtype, implemented
transformation), timing/execution facts, used/generatedBy edges plus each
value's name and value-or-locator(+store), role classes, derivation edges,
and descriptors for the stores the record touches. List payloads go out as
one canonical-JSON string under their own predicate so they survive the
round trip. The mapping is pure: equal records give identical triple lists.
"""

from __future__ import annotations

import json
from typing import Iterable, Optional

from provtrace import vocab
from provtrace.core.prospective import DataStoreSpec, MlRole, StoreKind
from provtrace.core.retrospective import (
    DataValue,
    Direction,
    ExecutionMeta,
    ProvRecord,
    Reference,
    TaskExecution,
    TaskStatus,
    iso_to_ts,
    ts_to_iso,
)
from provtrace.core.uris import parse_uri, transformation_uri
from provtrace.store.terms import Iri, Term
from provtrace.store.triples import Triple


def _value_triples(value: DataValue, task: Iri, store_edge: Optional[str]) -> list[Triple]:
    v = Iri(value.uri)
    out = []
    if value.role is Direction.CONSUMED:
        out.append(Triple(task, vocab.USED, v))
    else:
        out.append(Triple(v, vocab.GENERATED_BY, task))
    out.append(Triple(v, vocab.ATTRIBUTE_NAME, value.attribute_name))
    if isinstance(value.payload, Reference):
        out.append(Triple(v, vocab.LOCATOR, value.payload.locator))
        if store_edge:
            out.append(Triple(v, vocab.IN_STORE, Iri(store_edge)))
    elif isinstance(value.payload, tuple):
        out.append(Triple(v, vocab.VALUE_LIST, json.dumps(list(value.payload), separators=(",", ":"))))
    else:
        out.append(Triple(v, vocab.VALUE, value.payload))
    role_class = vocab.ROLE_CLASS.get(value.ml_role)
    if role_class is not None:
        out.append(Triple(v, vocab.TYPE, role_class))
    return out


def map_to_triples(record: ProvRecord) -> list[Triple]:
    task = Iri(record.task.uri)
    parts = parse_uri(record.task.uri)
    out = [Triple(task, vocab.TYPE, vocab.EXECUTION)]
    if record.task.stage is not None:
        out.append(Triple(task, vocab.TYPE, vocab.STAGE_CLASS[record.task.stage]))
    if record.spec_key is not None:
        out.append(
            Triple(
                task,
                vocab.IMPLEMENTS,
                Iri(
                    transformation_uri(
                        parts.namespace, record.spec_key[0], record.spec_key[1], record.task.transformation_name
                    )
                ),
            )
        )
    if record.task.start_time is not None:
        out.append(Triple(task, vocab.STARTED_AT, ts_to_iso(record.task.start_time)))
    if record.task.end_time is not None:
        out.append(Triple(task, vocab.ENDED_AT, ts_to_iso(record.task.end_time)))
    out.append(Triple(task, vocab.STATUS, record.task.status.value))
    meta = record.task.execution_meta
    out.append(Triple(task, vocab.ON_HOST, meta.hostname))
    if meta.job_id is not None:
        out.append(Triple(task, vocab.JOB_ID, meta.job_id))
    out.append(Triple(task, vocab.BY_AGENT, meta.agent))

    edge_by_value = dict(record.store_edges)
    for value in record.consumed:
        out.extend(_value_triples(value, task, edge_by_value.get(value.uri)))
    for value in record.generated:
        out.extend(_value_triples(value, task, edge_by_value.get(value.uri)))
    for consumer, producer in record.derivations:
        out.append(Triple(Iri(consumer), vocab.DERIVED_FROM, Iri(producer)))
    for store in record.stores:
        s = Iri(_store_uri_of(record, store.store_id))
        out.append(Triple(s, vocab.TYPE, vocab.DATA_STORE))
        out.append(Triple(s, vocab.STORE_KIND, store.store_kind.value))
        out.append(Triple(s, vocab.LOCATION, store.location))
    return out


def _store_uri_of(record: ProvRecord, store_id: str) -> str:
    for value_uri, store_uri_text in record.store_edges:
        parts = parse_uri(store_uri_text)
        if parts.store_id == store_id:
            return store_uri_text
    parts = parse_uri(record.task.uri)
    from provtrace.core.uris import store_uri

    return store_uri(parts.namespace, store_id)


def record_from_triples(triples: Iterable[Triple]) -> ProvRecord:
    """Rebuild a record from the triples of exactly one mapped record.

    Inverse of map_to_triples for queryable content: task identity, timing,
    status, host/agent/job, stage, attribute values, derivations, and store
    descriptors all round-trip; list order inside the record does not.
    """
    triples = list(triples)
    task_uri = None
    for t in triples:
        if t.p == vocab.TYPE and t.o == vocab.EXECUTION:
            task_uri = t.s
            break
    if task_uri is None:
        raise ValueError("no execution node in triple set")

    by_subject: dict[str, list[Triple]] = {}
    for t in triples:
        if isinstance(t.s, Iri):
            by_subject.setdefault(t.s.value, []).append(t)

    task_facts = {t.p: t.o for t in by_subject[task_uri.value] if t.p != vocab.TYPE}
    stage = None
    for t in by_subject[task_uri.value]:
        if t.p == vocab.TYPE and t.o in vocab.STAGE_BY_CLASS:
            stage = vocab.STAGE_BY_CLASS[t.o]
    parts = parse_uri(task_uri.value)

    consumed_uris = [t.o.value for t in by_subject[task_uri.value] if t.p == vocab.USED]
    generated_uris = [t.s.value for t in triples if t.p == vocab.GENERATED_BY and t.o == task_uri]

    stores = []
    store_edges = []
    derivations = []
    store_kinds: dict[str, tuple] = {}
    for t in triples:
        if t.p == vocab.STORE_KIND:
            store_kinds.setdefault(t.s.value, [None, None])[0] = t.o
        elif t.p == vocab.LOCATION:
            store_kinds.setdefault(t.s.value, [None, None])[1] = t.o
        elif t.p == vocab.DERIVED_FROM:
            derivations.append((t.s.value, t.o.value))
    for uri_text, (kind, location) in sorted(store_kinds.items()):
        stores.append(DataStoreSpec(parse_uri(uri_text).store_id, StoreKind(kind), location))

    def build_value(uri: str, direction: Direction) -> DataValue:
        facts = {t.p: t.o for t in by_subject.get(uri, [])}
        role = MlRole.PLAIN
        for t in by_subject.get(uri, []):
            if t.p == vocab.TYPE and t.o in vocab.ROLE_BY_CLASS:
                role = vocab.ROLE_BY_CLASS[t.o]
        if vocab.LOCATOR in facts:
            store_iri = facts.get(vocab.IN_STORE)
            store_id = parse_uri(store_iri.value).store_id if store_iri else ""
            payload = Reference(store_id=store_id, locator=facts[vocab.LOCATOR])
            if store_iri:
                store_edges.append((uri, store_iri.value))
        elif vocab.VALUE_LIST in facts:
            payload = tuple(json.loads(facts[vocab.VALUE_LIST]))
        else:
            payload = facts[vocab.VALUE]
        return DataValue(
            uri=uri,
            attribute_name=facts[vocab.ATTRIBUTE_NAME],
            payload=payload,
            role=direction,
            ml_role=role,
        )

    impl = task_facts.get(vocab.IMPLEMENTS)
    tf_name, spec_key = "", None
    if isinstance(impl, Iri):
        impl_parts = parse_uri(impl.value)
        tf_name = impl_parts.transformation_name
        spec_key = (impl_parts.workflow_name, impl_parts.version)

    task = TaskExecution(
        uri=task_uri.value,
        workflow_exec_id=parts.wf_exec_id,
        transformation_name=tf_name,
        start_time=iso_to_ts(task_facts[vocab.STARTED_AT]) if vocab.STARTED_AT in task_facts else None,
        end_time=iso_to_ts(task_facts[vocab.ENDED_AT]) if vocab.ENDED_AT in task_facts else None,
        status=TaskStatus(task_facts[vocab.STATUS]),
        execution_meta=ExecutionMeta(
            hostname=task_facts[vocab.ON_HOST],
            job_id=task_facts.get(vocab.JOB_ID),
            agent=task_facts.get(vocab.BY_AGENT, ""),
        ),
        stage=stage,
    )
    return ProvRecord(
        task=task,
        consumed=tuple(sorted((build_value(u, Direction.CONSUMED) for u in consumed_uris), key=lambda v: v.uri)),
        generated=tuple(sorted((build_value(u, Direction.GENERATED) for u in generated_uris), key=lambda v: v.uri)),
        derivations=tuple(sorted(derivations)),
        store_edges=tuple(sorted(store_edges)),
        stores=tuple(stores),
        spec_key=spec_key,
    )
