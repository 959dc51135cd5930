"""The provenance vocabulary: every predicate and class IRI used in the graph.

All terms live under the local ``provml:`` namespace. Stage subtypes refine
the base execution class so queries can select by learning stage.
"""

from __future__ import annotations

from provtrace.core.prospective import MlRole, Stage
from provtrace.store.terms import Iri

PREFIX = "provml:"

# Classes
TYPE = Iri(PREFIX + "type")
EXECUTION = Iri(PREFIX + "Execution")
TRAINING_EXECUTION = Iri(PREFIX + "TrainingExecution")
VALIDATION_EXECUTION = Iri(PREFIX + "ValidationExecution")
TEST_EXECUTION = Iri(PREFIX + "TestExecution")
HYPERPARAMETER = Iri(PREFIX + "Hyperparameter")
EVALUATION_MEASURE = Iri(PREFIX + "EvaluationMeasure")
MODEL_REFERENCE = Iri(PREFIX + "ModelReference")
DATASET_REFERENCE = Iri(PREFIX + "DatasetReference")
DATA_STORE = Iri(PREFIX + "DataStore")

# Task predicates
IMPLEMENTS = Iri(PREFIX + "implements")
STARTED_AT = Iri(PREFIX + "startedAt")
ENDED_AT = Iri(PREFIX + "endedAt")
STATUS = Iri(PREFIX + "status")
ON_HOST = Iri(PREFIX + "onHost")
JOB_ID = Iri(PREFIX + "jobId")
BY_AGENT = Iri(PREFIX + "byAgent")

# Data predicates
USED = Iri(PREFIX + "used")
GENERATED_BY = Iri(PREFIX + "generatedBy")
ATTRIBUTE_NAME = Iri(PREFIX + "attributeName")
VALUE = Iri(PREFIX + "value")
VALUE_LIST = Iri(PREFIX + "valueList")
LOCATOR = Iri(PREFIX + "locator")
IN_STORE = Iri(PREFIX + "inStore")
DERIVED_FROM = Iri(PREFIX + "derivedFrom")

# Store predicates
STORE_KIND = Iri(PREFIX + "storeKind")
LOCATION = Iri(PREFIX + "location")

STAGE_CLASS = {
    Stage.TRAINING: TRAINING_EXECUTION,
    Stage.VALIDATION: VALIDATION_EXECUTION,
    Stage.TEST: TEST_EXECUTION,
}

ROLE_CLASS = {
    MlRole.HYPERPARAMETER: HYPERPARAMETER,
    MlRole.EVALUATION_METRIC: EVALUATION_MEASURE,
    MlRole.MODEL_REFERENCE: MODEL_REFERENCE,
    MlRole.DATASET_REFERENCE: DATASET_REFERENCE,
}

STAGE_BY_CLASS = {iri: stage for stage, iri in STAGE_CLASS.items()}
ROLE_BY_CLASS = {iri: role for role, iri in ROLE_CLASS.items()}
