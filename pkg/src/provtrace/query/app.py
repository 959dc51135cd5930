"""Query engine HTTP surface."""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from provtrace.query.engine import NotFound, QueryDescriptor, QueryEngine
from provtrace.store.pattern import PatternError
from provtrace.store.textquery import QueryParseError


def create_query_app(engine: QueryEngine, follow_store: bool = False) -> FastAPI:
    """follow_store refreshes a read-only store handle before each query, so a
    query service in its own process sees the manager's latest bulk insert."""
    app = FastAPI(title="provtrace query engine", docs_url=None, redoc_url=None)
    app.state.engine = engine

    def fresh() -> QueryEngine:
        if follow_store:
            engine.store.refresh()
        return engine

    @app.exception_handler(NotFound)
    async def _not_found(request: Request, exc: NotFound):
        return JSONResponse(status_code=404, content={"error": "not-found", "detail": str(exc)})

    @app.get("/v1/lineage/backward")
    async def lineage_backward(uri: str, stop: str = ""):
        stops = {s for s in stop.split(",") if s}
        sub = fresh().lineage_backward(uri, stop_types=stops or None)
        descriptor = QueryDescriptor.make("lineage_backward", {"uri": uri, "stop": stop})
        return {"descriptor": descriptor.to_obj(), "subgraph": sub.to_obj()}

    @app.get("/v1/lineage/forward")
    async def lineage_forward(uri: str):
        sub = fresh().lineage_forward(uri)
        descriptor = QueryDescriptor.make("lineage_forward", {"uri": uri})
        return {"descriptor": descriptor.to_obj(), "subgraph": sub.to_obj()}

    @app.get("/v1/models/best")
    async def best_model(metric: str, objective: str = "min", scope: Optional[str] = None):
        if objective not in ("min", "max"):
            return JSONResponse(status_code=400, content={"error": "bad-request", "detail": "objective must be min or max"})
        result = fresh().best_model(metric, objective, scope)
        descriptor = QueryDescriptor.make(
            "best_model",
            {"metric": metric, "objective": objective, "scope": scope or ""},
            training_timing="intra" if scope else "inter",
        )
        return {"descriptor": descriptor.to_obj(), **result}

    @app.get("/v1/executions/{exec_id}/training-stats")
    async def training_stats(exec_id: str):
        result = fresh().training_stats(exec_id)
        descriptor = QueryDescriptor.make("training_stats", {"workflow_exec_id": exec_id})
        return {"descriptor": descriptor.to_obj(), **result}

    @app.get("/v1/models/{uri:path}/domain-trace")
    async def domain_trace(uri: str):
        result = fresh().domain_trace(uri)
        descriptor = QueryDescriptor.make("domain_trace", {"uri": uri})
        return {"descriptor": descriptor.to_obj(), **result}

    @app.post("/v1/query")
    async def raw_query(request: Request):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("application/json"):
            body = await request.json()
            text = body.get("text", "") if isinstance(body, dict) else ""
        else:
            text = (await request.body()).decode("utf-8")
        if not text.strip():
            return JSONResponse(status_code=400, content={"error": "bad-request", "detail": "empty query"})
        try:
            result = fresh().raw(text)
        except QueryParseError as exc:
            return JSONResponse(
                status_code=400, content={"error": "parse", "detail": str(exc), "position": exc.position}
            )
        except PatternError as exc:
            return JSONResponse(status_code=422, content={"error": "pattern", "detail": str(exc)})
        descriptor = QueryDescriptor.make("raw", {"text": text})
        return {"descriptor": descriptor.to_obj(), **result}

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "service": "query"}

    return app
