"""HTTP API over the repair service.

All bodies are JSON.  The repair run itself is asynchronous: POST .../repair
answers 202 immediately and the client polls the session summary until the
status leaves "Repairing".
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from .exceptions import (
    AlreadyAccepted,
    NoLocations,
    PatchsmithError,
    SchemaError,
    SnapshotInconsistent,
    UnknownPatch,
    UnknownSession,
)
from .session import EngineConfig, RepairService
from .snapshot import problem_from_json, snapshot_from_json

_STATUS = {
    SchemaError: 400,
    SnapshotInconsistent: 422,
    UnknownSession: 404,
    UnknownPatch: 404,
    AlreadyAccepted: 409,
    NoLocations: 409,
}


def create_app(service: RepairService | None = None,
               static_dir: str | None = None) -> FastAPI:
    service = service or RepairService(EngineConfig())
    app = FastAPI(title="patchsmith", version="0.1.0")

    @app.exception_handler(PatchsmithError)
    async def engine_error(_request: Request, exc: PatchsmithError):
        status = 422
        for kind, code in _STATUS.items():
            if isinstance(exc, kind):
                status = code
                break
        return JSONResponse({"error": type(exc).__name__, "detail": str(exc)},
                            status_code=status)

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        snapshot = snapshot_from_json(await request.json())
        session = service.create_session(snapshot)
        return {"session_id": session.session_id}

    @app.get("/api/sessions/{session_id}")
    async def session_summary(session_id: str):
        return service.summary(session_id)

    @app.get("/api/sessions/{session_id}/trace")
    async def trace_page(
        session_id: str,
        start: int = Query(0, alias="from"),
        count: int = 100,
    ):
        return service.trace_page(session_id, start, count)

    @app.put("/api/sessions/{session_id}/problem", status_code=204)
    async def set_problem(session_id: str, request: Request):
        problem = problem_from_json(await request.json())
        service.set_problem(session_id, problem)
        return Response(status_code=204)

    @app.post("/api/sessions/{session_id}/repair", status_code=202)
    async def start_repair(session_id: str):
        service.start_repair(session_id)
        return {"session_id": session_id, "status": "Repairing"}

    @app.get("/api/sessions/{session_id}/patches")
    async def patches(session_id: str):
        return {"session_id": session_id,
                "status": service.summary(session_id)["status"],
                "entries": service.ranked_entries(session_id)}

    @app.get("/api/sessions/{session_id}/patches/{patch_id}/preview")
    async def preview(session_id: str, patch_id: str):
        return PlainTextResponse(service.preview(session_id, patch_id),
                                 media_type="text/x-diff")

    @app.post("/api/sessions/{session_id}/patches/{patch_id}/accept")
    async def accept(session_id: str, patch_id: str):
        return PlainTextResponse(service.accept(session_id, patch_id),
                                 media_type="text/plain")

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
