"""Query families: lineage walks, best-model selection, training statistics.

Lineage composes derivation edges with generatedBy/used through tasks, so a
backward walk alternates value <- producing task <- consumed values, and
every visited value carries its attribute facts and store edges along.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from provtrace import vocab
from provtrace.core.prospective import PATH_LIKE_KINDS, StoreKind
from provtrace.core.retrospective import ModelRecord, Reference, iso_to_ts
from provtrace.core.uris import UriError, parse_uri
from provtrace.store.pattern import Pattern, match
from provtrace.store.terms import Iri, Term, term_to_obj
from provtrace.store.textquery import parse_query
from provtrace.store.triples import TripleStore


class NotFound(LookupError):
    pass


_FAMILY_DEFAULTS = {
    "lineage_backward": {"direction": "backward"},
    "lineage_forward": {"direction": "forward"},
    "best_model": {"direction": "forward"},
    "training_stats": {"direction": "forward", "training_timing": "intra"},
    "domain_trace": {"direction": "backward"},
    "raw": {},
}


@dataclass(frozen=True)
class QueryDescriptor:
    """Which family answered, tagged with the provenance-analysis taxonomy."""

    family: str
    execution_timing: str = "online"
    training_timing: str = "inter"
    direction: Optional[str] = None
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _FAMILY_DEFAULTS:
            raise ValueError(f"unknown family {self.family!r}")
        default_dir = _FAMILY_DEFAULTS[self.family].get("direction")
        if default_dir and self.direction and self.direction != default_dir:
            raise ValueError(f"{self.family} implies direction {default_dir}")

    @classmethod
    def make(cls, family: str, parameters: dict, execution_timing: str = "online", training_timing: Optional[str] = None):
        defaults = _FAMILY_DEFAULTS[family]
        return cls(
            family=family,
            execution_timing=execution_timing,
            training_timing=training_timing or defaults.get("training_timing", "inter"),
            direction=defaults.get("direction"),
            parameters=parameters,
        )

    def to_obj(self) -> dict:
        return {
            "family": self.family,
            "execution_timing": self.execution_timing,
            "training_timing": self.training_timing,
            "direction": self.direction,
            "parameters": {k: str(v) for k, v in self.parameters.items()},
        }


@dataclass
class AnnotatedGraph:
    nodes: list[dict] = field(default_factory=list)
    edges: list[dict] = field(default_factory=list)

    def to_obj(self) -> dict:
        return {"nodes": self.nodes, "edges": self.edges}

    def node_uris(self) -> set[str]:
        return {n["uri"] for n in self.nodes}


class QueryEngine:
    def __init__(self, store: TripleStore):
        self.store = store

    # -- helpers --------------------------------------------------------------

    def _objects(self, s: Iri, p: Iri) -> list[Term]:
        return [t.o for t in self.store.candidates(s, p, None)]

    def _subjects(self, p: Iri, o: Term) -> list[Term]:
        return [t.s for t in self.store.candidates(None, p, o)]

    def _types(self, node: Iri) -> list[str]:
        return sorted(o.value for o in self._objects(node, vocab.TYPE) if isinstance(o, Iri))

    def _node_attrs(self, node: Iri) -> dict:
        attrs: dict = {}
        for t in self.store.candidates(node, None, None):
            if t.p == vocab.TYPE or isinstance(t.o, Iri):
                continue
            key = t.p.value.removeprefix(vocab.PREFIX)
            attrs.setdefault(key, []).append(t.o)
        return {k: (v[0] if len(v) == 1 else sorted(v, key=str)) for k, v in attrs.items()}

    def _annotate(self, uris: list[str], edges: list[tuple[str, str, str]]) -> AnnotatedGraph:
        graph = AnnotatedGraph()
        for uri in uris:
            node = Iri(uri)
            entry = {"uri": uri, "types": self._types(node), "attrs": {k: term_to_obj(v) for k, v in self._node_attrs(node).items()}}
            store_edges = [o.value for o in self._objects(node, vocab.IN_STORE) if isinstance(o, Iri)]
            if store_edges:
                entry["stores"] = sorted(store_edges)
            graph.nodes.append(entry)
        graph.edges = [{"from": f, "pred": p, "to": t} for f, p, t in edges]
        return graph

    def _is_task(self, node: Iri) -> bool:
        return (node, vocab.TYPE, vocab.EXECUTION) in self.store

    # -- lineage --------------------------------------------------------------

    def _lineage(self, entity: str, backward: bool, stop_types: Optional[set[str]] = None) -> AnnotatedGraph:
        start = Iri(entity)
        if not self.store.node_exists(start):
            raise NotFound(f"unknown entity {entity!r}")
        stops = {Iri(s) for s in (stop_types or set())}
        visited: list[str] = []
        seen: set[str] = set()
        edges: list[tuple[str, str, str]] = []
        frontier = [start]
        seen.add(entity)
        visited.append(entity)
        while frontier:
            next_frontier = []
            for node in frontier:
                if any((node, vocab.TYPE, st) in self.store for st in stops):
                    continue
                neighbors: list[tuple[Iri, tuple[str, str, str]]] = []
                if backward:
                    for o in self._objects(node, vocab.DERIVED_FROM):
                        neighbors.append((o, (node.value, "derivedFrom", o.value)))
                    if self._is_task(node):
                        for o in self._objects(node, vocab.USED):
                            neighbors.append((o, (node.value, "used", o.value)))
                    else:
                        for o in self._objects(node, vocab.GENERATED_BY):
                            neighbors.append((o, (node.value, "generatedBy", o.value)))
                else:
                    for s in self._subjects(vocab.DERIVED_FROM, node):
                        neighbors.append((s, (s.value, "derivedFrom", node.value)))
                    if self._is_task(node):
                        for s in self._subjects(vocab.GENERATED_BY, node):
                            neighbors.append((s, (s.value, "generatedBy", node.value)))
                    else:
                        for s in self._subjects(vocab.USED, node):
                            neighbors.append((s, (s.value, "used", node.value)))
                for other, edge in neighbors:
                    if not isinstance(other, Iri):
                        continue
                    edges.append(edge)
                    if other.value in seen:
                        continue
                    seen.add(other.value)
                    visited.append(other.value)
                    next_frontier.append(other)
            frontier = next_frontier
        unique_edges = list(dict.fromkeys(edges))
        return self._annotate(visited, unique_edges)

    def lineage_backward(self, entity: str, stop_types: Optional[set[str]] = None) -> AnnotatedGraph:
        return self._lineage(entity, backward=True, stop_types=stop_types)

    def lineage_forward(self, entity: str) -> AnnotatedGraph:
        return self._lineage(entity, backward=False)

    # -- models ---------------------------------------------------------------

    def _model_candidates(self, scope: Optional[str] = None) -> list[dict]:
        """Every model-reference value with its producing task's parameters and
        all numeric evaluation-measure values, keyed by metric name."""
        out = []
        for model in self._subjects(vocab.TYPE, vocab.MODEL_REFERENCE):
            if not isinstance(model, Iri):
                continue
            tasks = [o for o in self._objects(model, vocab.GENERATED_BY) if isinstance(o, Iri)]
            if not tasks:
                continue
            task = tasks[0]
            exec_id = parse_uri(task.value).wf_exec_id
            if scope is not None and exec_id != scope:
                continue
            hyper: dict = {}
            for v in self._objects(task, vocab.USED):
                if isinstance(v, Iri) and (v, vocab.TYPE, vocab.HYPERPARAMETER) in self.store:
                    names = self._objects(v, vocab.ATTRIBUTE_NAME)
                    values = self._objects(v, vocab.VALUE)
                    if names and values:
                        hyper[names[0]] = values[0]
            metric_values: dict[str, list] = {}
            for v in self._subjects(vocab.GENERATED_BY, task):
                if isinstance(v, Iri) and (v, vocab.TYPE, vocab.EVALUATION_MEASURE) in self.store:
                    names = self._objects(v, vocab.ATTRIBUTE_NAME)
                    values = [
                        x for x in self._objects(v, vocab.VALUE)
                        if isinstance(x, (int, float)) and not isinstance(x, bool)
                    ]
                    if names and values:
                        metric_values.setdefault(names[0], []).extend(values)
            locators = self._objects(model, vocab.LOCATOR)
            stores = [o for o in self._objects(model, vocab.IN_STORE) if isinstance(o, Iri)]
            file_ref = None
            if locators:
                store_id = parse_uri(stores[0].value).store_id if stores else ""
                file_ref = Reference(store_id=store_id, locator=locators[0])
            out.append(
                {
                    "model_uri": model.value,
                    "task_uri": task.value,
                    "file_reference": file_ref,
                    "hyperparameters": hyper,
                    "metric_values": metric_values,
                }
            )
        return out

    def model_records(self, scope: Optional[str] = None) -> list[ModelRecord]:
        records = []
        for cand in self._model_candidates(scope=scope):
            records.append(
                ModelRecord(
                    model_uri=cand["model_uri"],
                    file_reference=cand["file_reference"],
                    hyperparameters=cand["hyperparameters"],
                    metrics={name: min(values) for name, values in cand["metric_values"].items()},
                    produced_by=cand["task_uri"],
                )
            )
        return records

    def best_model(self, metric: str, objective: str = "min", scope: Optional[str] = None) -> dict:
        """Extremal model by a named evaluation measure; ties go to the smallest URI."""
        if objective not in ("min", "max"):
            raise ValueError("objective must be min or max")
        candidates = []
        for cand in self._model_candidates(scope=scope):
            values = cand["metric_values"].get(metric)
            if not values:
                continue
            value = min(values) if objective == "min" else max(values)
            candidates.append((value, cand))
        if not candidates:
            raise NotFound(f"no model carries metric {metric!r}" + (f" in {scope}" if scope else ""))
        best_value = min(v for v, _ in candidates) if objective == "min" else max(v for v, _ in candidates)
        winner = min((c for v, c in candidates if v == best_value), key=lambda c: c["model_uri"])
        return {
            "model_uri": winner["model_uri"],
            "metric": metric,
            "metric_value": best_value,
            "hyperparameters": {k: term_to_obj(v) for k, v in sorted(winner["hyperparameters"].items())},
        }

    # -- execution statistics ---------------------------------------------------

    def training_stats(self, workflow_exec_id: str) -> dict:
        """Duration statistics over finished training-stage tasks of one execution."""
        tasks = [s for s in self._subjects(vocab.TYPE, vocab.EXECUTION) if isinstance(s, Iri)]
        in_exec = []
        for task in tasks:
            try:
                parts = parse_uri(task.value)
            except UriError:
                continue
            if parts.wf_exec_id == workflow_exec_id:
                in_exec.append(task)
        if not in_exec:
            raise NotFound(f"unknown execution {workflow_exec_id!r}")
        durations = []
        for task in in_exec:
            if (task, vocab.TYPE, vocab.TRAINING_EXECUTION) not in self.store:
                continue
            started = self._objects(task, vocab.STARTED_AT)
            ended = self._objects(task, vocab.ENDED_AT)
            if not started or not ended:
                continue
            durations.append((iso_to_ts(ended[0]) - iso_to_ts(started[0])) / 1_000_000)
        if not durations:
            return {"workflow_exec_id": workflow_exec_id, "count": 0, "min_s": None, "max_s": None, "avg_s": None}
        return {
            "workflow_exec_id": workflow_exec_id,
            "count": len(durations),
            "min_s": min(durations),
            "max_s": max(durations),
            "avg_s": sum(durations) / len(durations),
        }

    # -- domain trace -------------------------------------------------------------

    def domain_trace(self, model_uri: str) -> dict:
        """Referenced ancestry of a model: raw files with extracted attributes, plus
        opaque references into external domain stores for the caller to resolve.

        External references ride along two ways: visited directly by the
        backward walk, or recorded as outputs of the task adjacent to a
        visited raw file (the task that extracted from or produced it), which
        is where curation-time annotations live.
        """
        graph = self.lineage_backward(model_uri)
        kind_by_store: dict[str, str] = {}
        for store_node in self._subjects(vocab.TYPE, vocab.DATA_STORE):
            kinds = self._objects(store_node, vocab.STORE_KIND)
            if isinstance(store_node, Iri) and kinds:
                kind_by_store[store_node.value] = kinds[0]

        def store_kind_of(store_iri: str) -> Optional[StoreKind]:
            kind = kind_by_store.get(store_iri)
            return StoreKind(kind) if kind is not None else None

        raw_references = []
        external_refs: set[tuple[str, str]] = set()
        for node in graph.nodes:
            if node["uri"] == model_uri or "stores" not in node:
                continue
            locator = node["attrs"].get("locator")
            if locator is None:
                continue
            store_iri = node["stores"][0]
            store_id = parse_uri(store_iri).store_id
            kind = store_kind_of(store_iri)
            if kind in PATH_LIKE_KINDS:
                attributes, annotations = self._adjacent_outputs(Iri(node["uri"]), store_kind_of)
                raw_references.append({"locator": locator, "store": store_id, "attributes": attributes})
                external_refs.update(annotations)
            else:
                external_refs.add((store_id, locator))
        raw_references.sort(key=lambda r: (r["store"], r["locator"]))
        return {
            "model_uri": model_uri,
            "raw_references": raw_references,
            "external_refs": [list(e) for e in sorted(external_refs)],
        }

    def _adjacent_outputs(self, value_node: Iri, store_kind_of) -> tuple[dict, set[tuple[str, str]]]:
        """Outputs of the tasks adjacent to a reference value: its producer if
        any, else its consumers (the tasks that read the file and extracted
        from it). Literal outputs become the value's attributes; outputs
        referencing non-path-like stores are domain annotations."""
        tasks = [o for o in self._objects(value_node, vocab.GENERATED_BY) if isinstance(o, Iri)]
        if not tasks:
            tasks = [s for s in self._subjects(vocab.USED, value_node) if isinstance(s, Iri)]
        attributes: dict = {}
        annotations: set[tuple[str, str]] = set()
        for task in sorted(tasks, key=lambda t: t.value):
            for sibling in self._subjects(vocab.GENERATED_BY, task):
                if not isinstance(sibling, Iri):
                    continue
                names = self._objects(sibling, vocab.ATTRIBUTE_NAME)
                if not names:
                    continue
                values = self._objects(sibling, vocab.VALUE)
                if values:
                    attributes.setdefault(names[0], term_to_obj(values[0]))
                    continue
                locators = self._objects(sibling, vocab.LOCATOR)
                stores = [o for o in self._objects(sibling, vocab.IN_STORE) if isinstance(o, Iri)]
                if locators and stores and store_kind_of(stores[0].value) not in PATH_LIKE_KINDS:
                    annotations.add((parse_uri(stores[0].value).store_id, locators[0]))
        return attributes, annotations

    # -- raw --------------------------------------------------------------------

    def raw(self, text: str) -> dict:
        pattern = parse_query(text)
        rows = match(self.store, pattern)
        columns = pattern.projection or sorted({k for row in rows for k in row})
        return {
            "columns": columns,
            "rows": [[term_to_obj(row.get(c)) for c in columns] for row in rows],
        }
