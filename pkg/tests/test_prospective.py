import json

import pytest

from provtrace.core.prospective import (
    AttrKind,
    AttributeSpec,
    DataStoreSpec,
    MlRole,
    MlSemantics,
    ProspectiveSpec,
    SpecFormatError,
    Stage,
    StoreKind,
    TransformationSpec,
    derive_stage,
    load_spec,
    parse_spec_obj,
    spec_to_obj,
    validate_spec,
)


def attr(name, **kw):
    return AttributeSpec(name=name, **kw)


def good_spec() -> ProspectiveSpec:
    return ProspectiveSpec(
        workflow_name="train_classifier",
        version="1",
        data_stores=(
            DataStoreSpec("gpfs1", StoreKind.FILESYSTEM, "/gpfs"),
            DataStoreSpec("annot", StoreKind.DOCUMENT_DB, "mongodb://annot"),
        ),
        transformations=(
            TransformationSpec(
                name="training",
                ml_semantics=MlSemantics.TRAINING,
                inputs=(
                    attr("dataset", kind=AttrKind.DATA_REFERENCE, ml_role=MlRole.DATASET_REFERENCE, store_id="gpfs1"),
                    attr("learning_rate", ml_role=MlRole.HYPERPARAMETER),
                ),
                outputs=(
                    attr("model", kind=AttrKind.DATA_REFERENCE, ml_role=MlRole.MODEL_REFERENCE, store_id="gpfs1"),
                    attr("loss", ml_role=MlRole.EVALUATION_METRIC),
                ),
            ),
            TransformationSpec(name="prepare", ml_semantics=MlSemantics.DATA_PREPARATION),
        ),
    )


def test_good_spec_validates_clean():
    assert validate_spec(good_spec()) == []


def test_duplicate_transformation_name():
    spec = ProspectiveSpec(
        workflow_name="w",
        version="1",
        transformations=(TransformationSpec(name="training"), TransformationSpec(name="training")),
    )
    violations = validate_spec(spec)
    assert len(violations) == 1
    assert violations[0].rule == "duplicate-name"
    assert "training" in violations[0].element


def test_unknown_store_reference():
    spec = ProspectiveSpec(
        workflow_name="w",
        version="1",
        transformations=(
            TransformationSpec(
                name="t",
                inputs=(attr("f", kind=AttrKind.DATA_REFERENCE, store_id="s9"),),
            ),
        ),
    )
    violations = validate_spec(spec)
    assert [v.rule for v in violations] == ["unknown-store"]
    assert "s9" in violations[0].detail


def test_role_rules():
    spec = ProspectiveSpec(
        workflow_name="w",
        version="1",
        transformations=(
            TransformationSpec(
                name="t",
                ml_semantics=MlSemantics.NONE,
                inputs=(attr("lr", ml_role=MlRole.HYPERPARAMETER), attr("m", ml_role=MlRole.MODEL_REFERENCE)),
            ),
        ),
    )
    rules = sorted(v.rule for v in validate_spec(spec))
    assert rules == ["role-needs-ml-semantics", "role-needs-reference"]


def test_duplicate_attribute_across_inputs_outputs():
    spec = ProspectiveSpec(
        workflow_name="w",
        version="1",
        transformations=(TransformationSpec(name="t", inputs=(attr("x"),), outputs=(attr("x"),)),),
    )
    assert [v.rule for v in validate_spec(spec)] == ["duplicate-attribute"]


def test_derive_stage():
    assert derive_stage(MlSemantics.TRAINING) is Stage.TRAINING
    assert derive_stage(MlSemantics.TEST) is Stage.TEST
    assert derive_stage(MlSemantics.VALIDATION) is Stage.VALIDATION
    assert derive_stage(MlSemantics.DATA_PREPARATION) is None
    assert derive_stage(MlSemantics.NONE) is None


def test_round_trip_revalidates():
    spec = good_spec()
    assert validate_spec(spec) == []
    again = parse_spec_obj(json.loads(json.dumps(spec_to_obj(spec))))
    assert again == spec
    assert validate_spec(again) == []


def test_unknown_keys_rejected():
    obj = spec_to_obj(good_spec())
    obj["extra"] = 1
    with pytest.raises(SpecFormatError, match="unknown keys"):
        parse_spec_obj(obj)


def test_bad_enum_value_rejected():
    obj = spec_to_obj(good_spec())
    obj["transformations"][0]["ml_semantics"] = "trainingg"
    with pytest.raises(SpecFormatError, match="trainingg"):
        parse_spec_obj(obj)


def test_load_spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec_to_obj(good_spec())), encoding="utf-8")
    assert load_spec(path) == good_spec()
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(SpecFormatError):
        load_spec(path)
