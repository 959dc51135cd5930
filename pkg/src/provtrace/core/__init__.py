"""Shared vocabulary: identifiers, prospective specs, retrospective records."""

from provtrace.core.uris import UriError, UriParts, make_uri, parse_uri, store_uri, transformation_uri
from provtrace.core.prospective import (
    AttributeSpec,
    AttrKind,
    DataStoreSpec,
    MlRole,
    MlSemantics,
    ProspectiveSpec,
    SpecFormatError,
    Stage,
    StoreKind,
    TransformationSpec,
    Violation,
    derive_stage,
    load_spec,
    parse_spec_obj,
    spec_to_obj,
    validate_spec,
)
from provtrace.core.retrospective import (
    DataValue,
    ExecutionMeta,
    ModelRecord,
    ProvRecord,
    Reference,
    TaskExecution,
    TaskStatus,
    canon_literal,
)

__all__ = [
    "AttrKind",
    "AttributeSpec",
    "DataStoreSpec",
    "DataValue",
    "ExecutionMeta",
    "MlRole",
    "MlSemantics",
    "ModelRecord",
    "ProspectiveSpec",
    "ProvRecord",
    "Reference",
    "SpecFormatError",
    "Stage",
    "StoreKind",
    "TaskExecution",
    "TaskStatus",
    "TransformationSpec",
    "UriError",
    "UriParts",
    "Violation",
    "canon_literal",
    "derive_stage",
    "load_spec",
    "make_uri",
    "parse_spec_obj",
    "parse_uri",
    "spec_to_obj",
    "store_uri",
    "transformation_uri",
    "validate_spec",
]
