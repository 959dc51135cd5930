"""Manager HTTP surface."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from provtrace.manager.service import ManagerCore


def create_manager_app(core: ManagerCore) -> FastAPI:
    app = FastAPI(title="provtrace manager", docs_url=None, redoc_url=None)
    app.state.core = core

    @app.post("/v1/records")
    async def insert_records(request: Request):
        body = await request.json()
        if not isinstance(body, list):
            return JSONResponse(status_code=400, content={"error": "bad-request", "detail": "expected an array of records"})
        try:
            inserted = core.insert_records(body)
        except (KeyError, ValueError, TypeError) as exc:
            return JSONResponse(status_code=422, content={"error": "bad-record", "detail": str(exc)})
        return {"inserted": inserted}

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "service": "manager"}

    @app.get("/v1/stats")
    async def stats():
        return {"triples": len(core.store), "records_received": core.records_received}

    @app.get("/v1/dump")
    async def dump():
        return PlainTextResponse(core.store.to_ntriples(), media_type="application/n-triples")

    return app
