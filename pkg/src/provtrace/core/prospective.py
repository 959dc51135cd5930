"""Prospective side of the vocabulary: workflow specs and their validation.

A workflow ships one spec file describing its transformations and the
semantics of their attributes; every service interprets capture events
through this spec, so it is loaded once and validated up front.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union


class AttrKind(str, Enum):
    LITERAL = "literal"
    DATA_REFERENCE = "data_reference"
    LITERAL_LIST = "literal_list"


class MlRole(str, Enum):
    PLAIN = "plain"
    HYPERPARAMETER = "hyperparameter"
    EVALUATION_METRIC = "evaluation_metric"
    DATASET_REFERENCE = "dataset_reference"
    MODEL_REFERENCE = "model_reference"


class MlSemantics(str, Enum):
    NONE = "none"
    DATA_PREPARATION = "data_preparation"
    TRAINING = "training"
    VALIDATION = "validation"
    TEST = "test"


class Stage(str, Enum):
    TRAINING = "training"
    VALIDATION = "validation"
    TEST = "test"


class StoreKind(str, Enum):
    FILESYSTEM = "filesystem"
    OBJECT_STORE = "object_store"
    DOCUMENT_DB = "document_db"
    TRIPLE_STORE = "triple_store"
    RELATIONAL_DB = "relational_db"


# Store kinds whose locators are path-like and get normalized before matching.
PATH_LIKE_KINDS = frozenset({StoreKind.FILESYSTEM, StoreKind.OBJECT_STORE})


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: AttrKind = AttrKind.LITERAL
    ml_role: MlRole = MlRole.PLAIN
    store_id: Optional[str] = None


@dataclass(frozen=True)
class TransformationSpec:
    name: str
    inputs: tuple[AttributeSpec, ...] = ()
    outputs: tuple[AttributeSpec, ...] = ()
    ml_semantics: MlSemantics = MlSemantics.NONE

    def attribute(self, name: str, output: bool) -> Optional[AttributeSpec]:
        for attr in self.outputs if output else self.inputs:
            if attr.name == name:
                return attr
        return None


@dataclass(frozen=True)
class DataStoreSpec:
    store_id: str
    store_kind: StoreKind
    location: str


@dataclass(frozen=True)
class ProspectiveSpec:
    workflow_name: str
    version: str
    transformations: tuple[TransformationSpec, ...] = ()
    data_stores: tuple[DataStoreSpec, ...] = ()

    def transformation(self, name: str) -> Optional[TransformationSpec]:
        for tf in self.transformations:
            if tf.name == name:
                return tf
        return None

    def store(self, store_id: str) -> Optional[DataStoreSpec]:
        for st in self.data_stores:
            if st.store_id == store_id:
                return st
        return None

    @property
    def key(self) -> tuple[str, str]:
        return (self.workflow_name, self.version)


def derive_stage(tf: Union[TransformationSpec, MlSemantics]) -> Optional[Stage]:
    """Learning-stage typing: training/validation/test map to a stage, others to none."""
    sem = tf.ml_semantics if isinstance(tf, TransformationSpec) else tf
    if sem in (MlSemantics.TRAINING, MlSemantics.VALIDATION, MlSemantics.TEST):
        return Stage(sem.value)
    return None


@dataclass(frozen=True)
class Violation:
    """One broken spec invariant: which element, which rule, and the detail."""

    element: str
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"{self.element}: {self.rule}: {self.detail}"


def validate_spec(spec: ProspectiveSpec) -> list[Violation]:
    """Check every spec invariant; an empty list means the spec is well-formed."""
    out: list[Violation] = []
    if not spec.workflow_name:
        out.append(Violation("spec", "workflow-name", "workflow_name is empty"))
    if not spec.version:
        out.append(Violation("spec", "version", "version is empty"))

    seen_stores: set[str] = set()
    for st in spec.data_stores:
        if st.store_id in seen_stores:
            out.append(Violation(f"store:{st.store_id}", "duplicate-store", "store_id declared twice"))
        seen_stores.add(st.store_id)

    seen_tf: set[str] = set()
    for tf in spec.transformations:
        if tf.name in seen_tf:
            out.append(Violation(f"transformation:{tf.name}", "duplicate-name", "transformation name declared twice"))
        seen_tf.add(tf.name)

        seen_attr: set[str] = set()
        for attr in tf.inputs + tf.outputs:
            el = f"transformation:{tf.name}/attribute:{attr.name}"
            if attr.name in seen_attr:
                out.append(Violation(el, "duplicate-attribute", "attribute name repeats across inputs and outputs"))
            seen_attr.add(attr.name)

            if attr.kind is AttrKind.DATA_REFERENCE:
                if not attr.store_id:
                    out.append(Violation(el, "missing-store", "data_reference attribute needs a store_id"))
                elif spec.store(attr.store_id) is None:
                    out.append(Violation(el, "unknown-store", f"store {attr.store_id!r} is not declared"))
            elif attr.store_id is not None:
                out.append(Violation(el, "spurious-store", "store_id is only valid for data_reference attributes"))

            if attr.ml_role in (MlRole.DATASET_REFERENCE, MlRole.MODEL_REFERENCE) and attr.kind is not AttrKind.DATA_REFERENCE:
                out.append(Violation(el, "role-needs-reference", f"ml_role {attr.ml_role.value} requires kind data_reference"))
            if attr.ml_role in (MlRole.HYPERPARAMETER, MlRole.EVALUATION_METRIC) and tf.ml_semantics is MlSemantics.NONE:
                out.append(
                    Violation(el, "role-needs-ml-semantics", f"ml_role {attr.ml_role.value} is not allowed when ml_semantics is none")
                )
    return out


class SpecFormatError(ValueError):
    """Raised when a spec document does not follow the file format."""


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SpecFormatError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise SpecFormatError(f"{where}: missing keys {sorted(missing)}")


def _parse_enum(enum_cls, value, where: str):
    try:
        return enum_cls(value)
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise SpecFormatError(f"{where}: {value!r} is not one of {valid}") from None


def _parse_attr(obj: dict, where: str) -> AttributeSpec:
    if not isinstance(obj, dict):
        raise SpecFormatError(f"{where}: attribute must be an object")
    _require_keys(obj, {"name", "kind", "ml_role", "store_id"}, {"name"}, where)
    name = obj["name"]
    if not isinstance(name, str) or not name:
        raise SpecFormatError(f"{where}: attribute name must be a non-empty string")
    return AttributeSpec(
        name=name,
        kind=_parse_enum(AttrKind, obj.get("kind", "literal"), f"{where}/{name}"),
        ml_role=_parse_enum(MlRole, obj.get("ml_role", "plain"), f"{where}/{name}"),
        store_id=obj.get("store_id"),
    )


def parse_spec_obj(obj: dict) -> ProspectiveSpec:
    """Build a ProspectiveSpec from a decoded JSON document; unknown keys are rejected."""
    if not isinstance(obj, dict):
        raise SpecFormatError("spec document must be a JSON object")
    _require_keys(
        obj,
        {"workflow_name", "version", "data_stores", "transformations"},
        {"workflow_name", "version"},
        "spec",
    )
    stores = []
    for i, st in enumerate(obj.get("data_stores", [])):
        where = f"data_stores[{i}]"
        if not isinstance(st, dict):
            raise SpecFormatError(f"{where}: must be an object")
        _require_keys(st, {"store_id", "store_kind", "location"}, {"store_id", "store_kind", "location"}, where)
        stores.append(
            DataStoreSpec(
                store_id=st["store_id"],
                store_kind=_parse_enum(StoreKind, st["store_kind"], where),
                location=st["location"],
            )
        )
    tfs = []
    for i, tf in enumerate(obj.get("transformations", [])):
        where = f"transformations[{i}]"
        if not isinstance(tf, dict):
            raise SpecFormatError(f"{where}: must be an object")
        _require_keys(tf, {"name", "ml_semantics", "inputs", "outputs"}, {"name"}, where)
        tfs.append(
            TransformationSpec(
                name=tf["name"],
                ml_semantics=_parse_enum(MlSemantics, tf.get("ml_semantics", "none"), where),
                inputs=tuple(_parse_attr(a, f"{where}/inputs[{j}]") for j, a in enumerate(tf.get("inputs", []))),
                outputs=tuple(_parse_attr(a, f"{where}/outputs[{j}]") for j, a in enumerate(tf.get("outputs", []))),
            )
        )
    return ProspectiveSpec(
        workflow_name=obj["workflow_name"],
        version=obj["version"],
        transformations=tuple(tfs),
        data_stores=tuple(stores),
    )


def _attr_to_obj(attr: AttributeSpec) -> dict:
    out = {"name": attr.name, "kind": attr.kind.value, "ml_role": attr.ml_role.value}
    if attr.store_id is not None:
        out["store_id"] = attr.store_id
    return out


def spec_to_obj(spec: ProspectiveSpec) -> dict:
    """Inverse of parse_spec_obj (also the canonical content for registry hashing)."""
    return {
        "workflow_name": spec.workflow_name,
        "version": spec.version,
        "data_stores": [
            {"store_id": st.store_id, "store_kind": st.store_kind.value, "location": st.location}
            for st in spec.data_stores
        ],
        "transformations": [
            {
                "name": tf.name,
                "ml_semantics": tf.ml_semantics.value,
                "inputs": [_attr_to_obj(a) for a in tf.inputs],
                "outputs": [_attr_to_obj(a) for a in tf.outputs],
            }
            for tf in spec.transformations
        ],
    }


def load_spec(path: Union[str, Path]) -> ProspectiveSpec:
    """Load and parse a spec file; raises SpecFormatError on malformed documents."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"{path}: {exc}") from exc
    return parse_spec_obj(obj)
