"""Canned 3-phase lifecycle: curation -> preparation -> training.

The builder authors every value (timestamps included), replays the batches
through the live services, and returns the ids plus the values queries must
recover, so tests can assert against the authoring itself. Same seed, same
graph.
"""

from __future__ import annotations

import random
import time
import uuid
from dataclasses import dataclass, field

import requests

from provtrace.core.prospective import (
    AttrKind,
    AttributeSpec,
    DataStoreSpec,
    MlRole,
    MlSemantics,
    ProspectiveSpec,
    StoreKind,
    TransformationSpec,
    spec_to_obj,
)
from provtrace.core.retrospective import Reference
from provtrace.core.uris import make_uri
from provtrace.wire.codec import encode_batch
from provtrace.wire.events import CaptureEvent, EventBatch, EventKind, SpecRef

RAW_LOCATOR = "/gpfs/raw/netherlands.sgy"
ANNOTATION_REF = ("annot_kb", "kb/surveys/netherlands-42")
POLYGON_REF = ("curated_db", "polygons/netherlands")
EXTRACTED_ATTRS = {"x_min": 4.2, "x_max": 6.8, "inline_range": "100:551", "n_slices": 451}
MODEL_LOSSES = (0.12, 0.07, 0.31)
MODEL_ACCURACIES = (0.81, 0.88, 0.7)
ITERATION_DURATIONS_S = (2.0, 4.0, 6.0, 3.0, 5.0)


def curation_spec() -> ProspectiveSpec:
    return ProspectiveSpec(
        workflow_name="seismic_curation",
        version="1",
        data_stores=(
            DataStoreSpec("gpfs1", StoreKind.FILESYSTEM, "/gpfs"),
            DataStoreSpec("annot_kb", StoreKind.TRIPLE_STORE, "http://kb.internal/sparql"),
            DataStoreSpec("curated_db", StoreKind.DOCUMENT_DB, "mongodb://curated"),
        ),
        transformations=(
            TransformationSpec(
                name="curate_raw",
                inputs=(AttributeSpec("raw_file", AttrKind.DATA_REFERENCE, store_id="gpfs1"),),
                outputs=(
                    AttributeSpec("curated_file", AttrKind.DATA_REFERENCE, store_id="gpfs1"),
                    AttributeSpec("annotation", AttrKind.DATA_REFERENCE, store_id="annot_kb"),
                    AttributeSpec("polygons", AttrKind.DATA_REFERENCE, store_id="curated_db"),
                    AttributeSpec("x_min"),
                    AttributeSpec("x_max"),
                    AttributeSpec("inline_range"),
                    AttributeSpec("n_slices"),
                ),
            ),
        ),
    )


def preparation_spec() -> ProspectiveSpec:
    return ProspectiveSpec(
        workflow_name="dataset_prep",
        version="1",
        data_stores=(DataStoreSpec("gpfs1", StoreKind.FILESYSTEM, "/gpfs"),),
        transformations=(
            TransformationSpec(
                name="crop",
                ml_semantics=MlSemantics.DATA_PREPARATION,
                inputs=(
                    AttributeSpec("source", AttrKind.DATA_REFERENCE, store_id="gpfs1"),
                    AttributeSpec("tile_px"),
                ),
                outputs=(AttributeSpec("cropped", AttrKind.DATA_REFERENCE, store_id="gpfs1"),),
            ),
            TransformationSpec(
                name="scale",
                ml_semantics=MlSemantics.DATA_PREPARATION,
                inputs=(
                    AttributeSpec("cropped_in", AttrKind.DATA_REFERENCE, store_id="gpfs1"),
                    AttributeSpec("factor"),
                ),
                outputs=(AttributeSpec("dataset", AttrKind.DATA_REFERENCE, MlRole.DATASET_REFERENCE, "gpfs1"),),
            ),
        ),
    )


def training_spec() -> ProspectiveSpec:
    return ProspectiveSpec(
        workflow_name="train_classifier",
        version="1",
        data_stores=(DataStoreSpec("gpfs1", StoreKind.FILESYSTEM, "/gpfs"),),
        transformations=(
            TransformationSpec(
                name="training",
                ml_semantics=MlSemantics.TRAINING,
                inputs=(
                    AttributeSpec("dataset", AttrKind.DATA_REFERENCE, MlRole.DATASET_REFERENCE, "gpfs1"),
                    AttributeSpec("learning_rate", ml_role=MlRole.HYPERPARAMETER),
                    AttributeSpec("epochs", ml_role=MlRole.HYPERPARAMETER),
                ),
                outputs=(
                    AttributeSpec("model", AttrKind.DATA_REFERENCE, MlRole.MODEL_REFERENCE, "gpfs1"),
                    AttributeSpec("loss", ml_role=MlRole.EVALUATION_METRIC),
                    AttributeSpec("accuracy", ml_role=MlRole.EVALUATION_METRIC),
                ),
            ),
            TransformationSpec(
                name="train_iteration",
                ml_semantics=MlSemantics.TRAINING,
                inputs=(AttributeSpec("epoch"),),
                outputs=(AttributeSpec("iter_loss", ml_role=MlRole.EVALUATION_METRIC),),
            ),
        ),
    )


@dataclass
class Fixture:
    namespace: str = "pl"
    curation_exec: str = ""
    prep_execs: list[str] = field(default_factory=list)
    training_execs: list[str] = field(default_factory=list)
    model_uris: list[str] = field(default_factory=list)
    model_losses: dict[str, float] = field(default_factory=dict)
    best_model_uri: str = ""
    best_loss: float = 0.0
    raw_locator: str = RAW_LOCATOR
    external_refs: list[tuple[str, str]] = field(default_factory=list)
    extracted_attrs: dict = field(default_factory=dict)
    iteration_durations_s: tuple = ITERATION_DURATIONS_S
    hyperparameters: dict[str, dict] = field(default_factory=dict)
    batches: list[EventBatch] = field(default_factory=list)

    def to_obj(self) -> dict:
        return {
            "curation_exec": self.curation_exec,
            "prep_execs": self.prep_execs,
            "training_execs": self.training_execs,
            "model_uris": self.model_uris,
            "best_model_uri": self.best_model_uri,
            "best_loss": self.best_loss,
            "raw_locator": self.raw_locator,
            "external_refs": [list(e) for e in self.external_refs],
        }


class _Author:
    """Deterministic event authoring with seeded ids and a synthetic clock."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.clock_us = 1_735_000_000_000_000  # fixed epoch so graphs reproduce exactly
        self.batches: list[EventBatch] = []

    def exec_id(self, tag: str) -> str:
        return f"{tag}-{uuid.UUID(int=self.rng.getrandbits(128))}"

    def tick(self, seconds: float) -> None:
        self.clock_us += int(seconds * 1e6)

    def task(self, spec: ProspectiveSpec, exec_id: str, seq_state: dict, name: str, inputs: dict, outputs: dict,
             duration_s: float = 1.0) -> None:
        seq = seq_state.setdefault(exec_id, {"task": 0, "seq": 0})
        task_seq = seq["task"]
        seq["task"] += 1
        events = []
        for kind, attrs in ((EventKind.TASK_BEGIN, inputs), (EventKind.TASK_END, outputs)):
            events.append(
                CaptureEvent(
                    event_id=f"{self.rng.getrandbits(128):032x}",
                    kind=kind,
                    client_id=exec_id,
                    workflow_exec_id=exec_id,
                    task_seq=task_seq,
                    transformation_name=name,
                    attributes=attrs,
                    timestamp=self.clock_us,
                    seq_no=seq["seq"],
                )
            )
            seq["seq"] += 1
            self.tick(duration_s)
        self.batches.append(
            EventBatch(client_id=exec_id, spec_ref=SpecRef(spec.workflow_name, spec.version), events=tuple(events))
        )


def author_fixture(seed: int = 7, namespace: str = "pl") -> Fixture:
    """Build the whole event history without touching any service."""
    author = _Author(seed)
    fixture = Fixture(namespace=namespace)
    seq_state: dict = {}

    cur = curation_spec()
    fixture.curation_exec = author.exec_id("cur")
    author.task(
        cur,
        fixture.curation_exec,
        seq_state,
        "curate_raw",
        inputs={"raw_file": Reference("gpfs1", RAW_LOCATOR)},
        outputs={
            "curated_file": Reference("gpfs1", "/gpfs/curated/netherlands.h5"),
            "annotation": Reference(*ANNOTATION_REF),
            "polygons": Reference(*POLYGON_REF),
            **EXTRACTED_ATTRS,
        },
        duration_s=42.0,
    )

    prep = preparation_spec()
    datasets = []
    for k in range(2):
        exec_id = author.exec_id(f"prep{k}")
        fixture.prep_execs.append(exec_id)
        cropped = Reference("gpfs1", f"/gpfs/prep/cropped_{k}.h5")
        dataset = Reference("gpfs1", f"/gpfs/datasets/ds_{k}.npz")
        author.task(
            prep, exec_id, seq_state, "crop",
            inputs={"source": Reference("gpfs1", "/gpfs/curated/netherlands.h5"), "tile_px": 128},
            outputs={"cropped": cropped},
            duration_s=8.0,
        )
        author.task(
            prep, exec_id, seq_state, "scale",
            inputs={"cropped_in": cropped, "factor": 0.5},
            outputs={"dataset": dataset},
            duration_s=5.0,
        )
        datasets.append(dataset)

    train = training_spec()
    trainings = [
        {"dataset": datasets[0], "learning_rate": 0.01, "epochs": 100},
        {"dataset": datasets[0], "learning_rate": 0.001, "epochs": 200},
        {"dataset": datasets[1], "learning_rate": 0.1, "epochs": 50},
    ]
    for k, params in enumerate(trainings):
        exec_id = author.exec_id(f"train{k}")
        fixture.training_execs.append(exec_id)
        for i, dur in enumerate(ITERATION_DURATIONS_S):
            author.task(
                train, exec_id, seq_state, "train_iteration",
                inputs={"epoch": i},
                outputs={"iter_loss": round(1.0 / (i + 1) + k * 0.01, 4)},
                duration_s=dur,
            )
        model = Reference("gpfs1", f"/gpfs/models/model_{k}.pt")
        author.task(
            train, exec_id, seq_state, "training",
            inputs=dict(params),
            outputs={"model": model, "loss": MODEL_LOSSES[k], "accuracy": MODEL_ACCURACIES[k]},
            duration_s=30.0,
        )
        model_task_seq = seq_state[exec_id]["task"] - 1
        model_uri = make_uri(namespace, exec_id, model_task_seq, "model", 0)
        fixture.model_uris.append(model_uri)
        fixture.model_losses[model_uri] = MODEL_LOSSES[k]
        fixture.hyperparameters[model_uri] = {
            "learning_rate": params["learning_rate"],
            "epochs": params["epochs"],
        }

    fixture.best_loss = min(MODEL_LOSSES)
    fixture.best_model_uri = fixture.model_uris[MODEL_LOSSES.index(fixture.best_loss)]
    fixture.external_refs = [ANNOTATION_REF, POLYGON_REF]
    fixture.extracted_attrs = dict(EXTRACTED_ATTRS)
    fixture.batches = author.batches
    return fixture


def post_fixture(fixture: Fixture, tracker_endpoint: str, http: requests.Session = None) -> None:
    """Register specs, bind executions, and replay the authored batches."""
    own = http is None
    http = http or requests.Session()
    base = tracker_endpoint.rstrip("/")
    try:
        for spec in (curation_spec(), preparation_spec(), training_spec()):
            http.post(f"{base}/v1/spec", json=spec_to_obj(spec), timeout=10).raise_for_status()
        bindings = [(curation_spec(), [fixture.curation_exec]),
                    (preparation_spec(), fixture.prep_execs),
                    (training_spec(), fixture.training_execs)]
        for spec, exec_ids in bindings:
            for exec_id in exec_ids:
                http.post(
                    f"{base}/v1/workflow-exec",
                    json={
                        "workflow_name": spec.workflow_name,
                        "version": spec.version,
                        "workflow_exec_id": exec_id,
                        "execution_meta": {"hostname": "fixture-host", "agent": "fixture"},
                    },
                    timeout=10,
                ).raise_for_status()
        for batch in fixture.batches:
            resp = http.post(
                f"{base}/v1/capture",
                data=encode_batch(batch),
                headers={"content-type": "application/json"},
                timeout=10,
            )
            resp.raise_for_status()
    finally:
        if own:
            http.close()


def wait_until_queryable(fixture: Fixture, query_endpoint: str, timeout_s: float = 30.0) -> None:
    """Poll until the last model is visible through the query engine."""
    url = query_endpoint.rstrip("/") + "/v1/models/best"
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        try:
            resp = requests.get(url, params={"metric": "loss", "objective": "min"}, timeout=5)
            if resp.status_code == 200 and resp.json().get("model_uri") == fixture.best_model_uri:
                return
        except requests.RequestException:
            pass
        time.sleep(0.1)
    raise TimeoutError("fixture did not become queryable in time")


def build_fixture(tracker_endpoint: str, query_endpoint: str, seed: int = 7) -> Fixture:
    fixture = author_fixture(seed=seed)
    post_fixture(fixture, tracker_endpoint)
    wait_until_queryable(fixture, query_endpoint)
    return fixture
