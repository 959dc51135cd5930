"""Tracker HTTP surface."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from provtrace.core.prospective import SpecFormatError, parse_spec_obj
from provtrace.core.retrospective import ExecutionMeta
from provtrace.tracker.core import IngestError, SpecConflict, TrackerCore
from provtrace.wire.codec import BatchValidationError, ParseError, decode_batch, decode_ndjson

_INGEST_STATUS = {
    "unknown-spec": 409,
    "unbound-exec": 409,
    "exec-conflict": 409,
    "invalid-spec": 422,
    "malformed-events": 422,
}


def create_tracker_app(core: TrackerCore) -> FastAPI:
    app = FastAPI(title="provtrace tracker", docs_url=None, redoc_url=None)
    app.state.core = core

    @app.exception_handler(IngestError)
    async def _ingest_error(request: Request, exc: IngestError):
        status = _INGEST_STATUS.get(exc.kind, 400)
        return JSONResponse(
            status_code=status, content={"error": exc.kind, "detail": str(exc), "indices": exc.indices}
        )

    @app.post("/v1/spec")
    async def register_spec(request: Request):
        try:
            spec = parse_spec_obj(await request.json())
        except SpecFormatError as exc:
            return JSONResponse(status_code=400, content={"error": "spec-format", "detail": str(exc)})
        try:
            key = core.register_spec(spec)
        except SpecConflict as exc:
            return JSONResponse(status_code=409, content={"error": "spec-conflict", "detail": str(exc)})
        return {"workflow_name": key[0], "version": key[1]}

    @app.post("/v1/workflow-exec")
    async def bind_exec(request: Request):
        body = await request.json()
        for key in ("workflow_name", "version", "workflow_exec_id"):
            if key not in body:
                return JSONResponse(status_code=400, content={"error": "bad-request", "detail": f"missing {key}"})
        meta_obj = body.get("execution_meta")
        peer = request.client.host if request.client else "unknown"
        if meta_obj:
            meta_obj.setdefault("hostname", peer)
            meta = ExecutionMeta.from_obj(meta_obj)
        else:
            meta = ExecutionMeta(hostname=peer or "unknown", agent="")
        core.bind_exec(body["workflow_name"], body["version"], body["workflow_exec_id"], meta)
        return {"bound": True, "workflow_exec_id": body["workflow_exec_id"]}

    @app.post("/v1/capture")
    async def capture(request: Request):
        raw = await request.body()
        content_type = request.headers.get("content-type", "application/json")
        try:
            if content_type.startswith("application/x-ndjson"):
                batches = decode_ndjson(raw)
            else:
                batches = [decode_batch(raw)]
        except ParseError as exc:
            return JSONResponse(
                status_code=400, content={"error": "parse", "detail": str(exc), "offset": exc.offset}
            )
        except BatchValidationError as exc:
            return JSONResponse(status_code=422, content={"error": "validation", "rule": exc.rule, "detail": str(exc)})
        accepted = duplicates = 0
        for batch in batches:
            ack = core.ingest(batch)
            accepted += ack.accepted
            duplicates += ack.duplicates
        return {"accepted": accepted, "duplicates": duplicates}

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "service": "tracker"}

    @app.get("/v1/metrics")
    async def metrics():
        return core.metrics()

    return app
