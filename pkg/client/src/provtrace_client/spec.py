"""Workflow spec files: the prospective description every session loads once.

The file is a JSON document with ``workflow_name``, ``version``,
``data_stores`` ({store_id, store_kind, location}) and ``transformations``
({name, ml_semantics, inputs, outputs}); attributes are {name, kind,
ml_role, store_id?}. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

ATTR_KINDS = frozenset({"literal", "data_reference", "literal_list"})
ML_ROLES = frozenset({"plain", "hyperparameter", "evaluation_metric", "dataset_reference", "model_reference"})
ML_SEMANTICS = frozenset({"none", "data_preparation", "training", "validation", "test"})
STORE_KINDS = frozenset({"filesystem", "object_store", "document_db", "triple_store", "relational_db"})


class SpecError(ValueError):
    """Malformed or invalid workflow spec; message lists every violation."""


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str = "literal"
    ml_role: str = "plain"
    store_id: Optional[str] = None


@dataclass(frozen=True)
class Transformation:
    name: str
    ml_semantics: str = "none"
    inputs: tuple[Attribute, ...] = ()
    outputs: tuple[Attribute, ...] = ()

    def input_names(self) -> set[str]:
        return {a.name for a in self.inputs}

    def output_names(self) -> set[str]:
        return {a.name for a in self.outputs}


@dataclass(frozen=True)
class WorkflowSpec:
    workflow_name: str
    version: str
    transformations: tuple[Transformation, ...] = ()
    data_stores: tuple[dict, ...] = ()
    raw: dict = field(default_factory=dict, compare=False)

    def transformation(self, name: str) -> Optional[Transformation]:
        for tf in self.transformations:
            if tf.name == name:
                return tf
        return None


def _check_keys(obj: dict, allowed: set[str], where: str, problems: list[str]) -> None:
    unknown = set(obj) - allowed
    if unknown:
        problems.append(f"{where}: unknown keys {sorted(unknown)}")


def _parse_attr(obj: dict, where: str, problems: list[str]) -> Attribute:
    _check_keys(obj, {"name", "kind", "ml_role", "store_id"}, where, problems)
    kind = obj.get("kind", "literal")
    role = obj.get("ml_role", "plain")
    if kind not in ATTR_KINDS:
        problems.append(f"{where}: bad kind {kind!r}")
    if role not in ML_ROLES:
        problems.append(f"{where}: bad ml_role {role!r}")
    return Attribute(name=obj.get("name", ""), kind=kind, ml_role=role, store_id=obj.get("store_id"))


def parse_workflow_spec(obj: dict) -> WorkflowSpec:
    problems: list[str] = []
    if not isinstance(obj, dict):
        raise SpecError("spec document must be a JSON object")
    _check_keys(obj, {"workflow_name", "version", "data_stores", "transformations"}, "spec", problems)
    name = obj.get("workflow_name") or ""
    version = obj.get("version") or ""
    if not name:
        problems.append("spec: workflow_name missing or empty")
    if not version:
        problems.append("spec: version missing or empty")

    stores = tuple(obj.get("data_stores") or ())
    store_ids = set()
    for i, st in enumerate(stores):
        where = f"data_stores[{i}]"
        _check_keys(st, {"store_id", "store_kind", "location"}, where, problems)
        if st.get("store_kind") not in STORE_KINDS:
            problems.append(f"{where}: bad store_kind {st.get('store_kind')!r}")
        sid = st.get("store_id")
        if not sid:
            problems.append(f"{where}: store_id missing")
        elif sid in store_ids:
            problems.append(f"{where}: duplicate store_id {sid!r}")
        store_ids.add(sid)

    tfs = []
    tf_names = set()
    for i, tf_obj in enumerate(obj.get("transformations") or ()):
        where = f"transformations[{i}]"
        _check_keys(tf_obj, {"name", "ml_semantics", "inputs", "outputs"}, where, problems)
        tf_name = tf_obj.get("name") or ""
        if not tf_name:
            problems.append(f"{where}: name missing")
        if tf_name in tf_names:
            problems.append(f"{where}: duplicate transformation name {tf_name!r}")
        tf_names.add(tf_name)
        semantics = tf_obj.get("ml_semantics", "none")
        if semantics not in ML_SEMANTICS:
            problems.append(f"{where}: bad ml_semantics {semantics!r}")
        inputs = tuple(_parse_attr(a, f"{where}/inputs[{j}]", problems) for j, a in enumerate(tf_obj.get("inputs") or ()))
        outputs = tuple(_parse_attr(a, f"{where}/outputs[{j}]", problems) for j, a in enumerate(tf_obj.get("outputs") or ()))
        seen = set()
        for attr in inputs + outputs:
            if attr.name in seen:
                problems.append(f"{where}: attribute {attr.name!r} repeats across inputs/outputs")
            seen.add(attr.name)
            if attr.kind == "data_reference":
                if not attr.store_id:
                    problems.append(f"{where}/{attr.name}: data_reference needs store_id")
                elif attr.store_id not in store_ids:
                    problems.append(f"{where}/{attr.name}: unknown store {attr.store_id!r}")
            elif attr.store_id is not None:
                problems.append(f"{where}/{attr.name}: store_id only valid on data_reference")
            if attr.ml_role in ("dataset_reference", "model_reference") and attr.kind != "data_reference":
                problems.append(f"{where}/{attr.name}: {attr.ml_role} requires data_reference kind")
            if attr.ml_role in ("hyperparameter", "evaluation_metric") and semantics == "none":
                problems.append(f"{where}/{attr.name}: {attr.ml_role} not allowed when ml_semantics is none")
        tfs.append(Transformation(name=tf_name, ml_semantics=semantics, inputs=inputs, outputs=outputs))

    if problems:
        raise SpecError("; ".join(problems))
    return WorkflowSpec(
        workflow_name=name, version=version, transformations=tuple(tfs), data_stores=stores, raw=obj
    )


def load_workflow_spec(path: Union[str, Path]) -> WorkflowSpec:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: not valid JSON: {exc}") from exc
    return parse_workflow_spec(obj)
