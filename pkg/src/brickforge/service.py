"""HTTP API for the interactive browser client.

Sessions are in-memory project states; every geometry result comes from
the same stage engine the CLI uses, so replies are byte-identical to
library and CLI output.  Error bodies are always {stage, code, message}.
"""

from __future__ import annotations

import email.parser
import email.policy
import io
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import __version__, project as prj, stages
from .errors import (
    AmbiguousReference,
    BrickForgeError,
    MeshContractError,
    NoModelFound,
    ParseError,
    ProfileMismatch,
    ReferenceBrickNotFound,
    StateConflict,
    ValidationError,
    VersionError,
)
from .grid import BrickBitmask, Profile, Side, connected_components
from .mesh import TriangleMesh, analyze, balance_report, obj_bytes
from .reconstruct import DISCONNECTED_WARNING
from .vision import PipelineConfig, RawImage, scan_profile

_STATUS = {
    ValidationError: 422,
    MeshContractError: 422,
    NoModelFound: 422,
    ReferenceBrickNotFound: 422,
    AmbiguousReference: 422,
    ProfileMismatch: 409,
    StateConflict: 409,
    ParseError: 400,
    VersionError: 400,
}


@dataclass
class Session:
    state: prj.ProjectState
    results: list[stages.StageResult] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self) -> Session:
        sid = uuid.uuid4().hex[:12]
        session = Session(state=prj.ProjectState(id=sid))
        with self._lock:
            self._sessions[sid] = session
        return session

    def get(self, sid: str) -> Session:
        with self._lock:
            session = self._sessions.get(sid)
        if session is None:
            raise KeyError(sid)
        return session

    def drop(self, sid: str) -> bool:
        with self._lock:
            return self._sessions.pop(sid, None) is not None


def _error_response(status: int, stage: str, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"stage": stage, "code": code, "message": message}
    )


def _profile_summary(p: Profile) -> dict:
    return {
        "side": p.side.value,
        "cols": p.mask.cols,
        "rows": p.mask.rows,
        "cells": p.mask.to_text(),
        "warnings": list(p.warnings),
    }


def _parse_multipart(content_type: str, body: bytes) -> dict[str, bytes]:
    """Minimal multipart/form-data reader built on the stdlib email parser."""
    header = f"Content-Type: {content_type}\r\n\r\n".encode("ascii")
    msg = email.parser.BytesParser(policy=email.policy.HTTP).parsebytes(header + body)
    if not msg.is_multipart():
        raise ParseError("expected multipart/form-data body")
    parts: dict[str, bytes] = {}
    for part in msg.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if name:
            payload = part.get_payload(decode=True)
            parts[name] = payload if payload is not None else b""
    return parts


def create_app(static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="brickforge", version=__version__)
    store = SessionStore()
    app.state.store = store

    @app.exception_handler(BrickForgeError)
    async def _domain_error(request: Request, exc: BrickForgeError):
        status = 500
        for cls, code in _STATUS.items():
            if isinstance(exc, cls):
                status = code
                break
        return _error_response(status, exc.stage or "library", exc.code, exc.message)

    def _session_or_404(sid: str) -> Session:
        try:
            return store.get(sid)
        except KeyError:
            raise _NotFound(f"unknown session {sid!r}") from None

    class _NotFound(Exception):
        def __init__(self, message: str):
            self.message = message

    @app.exception_handler(_NotFound)
    async def _not_found(request: Request, exc: _NotFound):
        return _error_response(404, "service", "not-found", exc.message)

    @app.post("/sessions", status_code=201)
    def create_session():
        session = store.create()
        return {"id": session.state.id}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = _session_or_404(sid)
        with session.lock:
            return session.state.to_json_dict()

    @app.delete("/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        if not store.drop(sid):
            raise _NotFound(f"unknown session {sid!r}")
        return Response(status_code=204)

    @app.post("/sessions/{sid}/scan")
    async def scan(sid: str, request: Request, side: str | None = None):
        session = _session_or_404(sid)
        body = await request.body()
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/"):
            parts = _parse_multipart(content_type, body)
            if "image" not in parts:
                raise ValidationError("multipart body needs an 'image' file part", stage="service")
            image_bytes = parts["image"]
            side = side or parts.get("side", b"").decode("utf-8") or None
        else:
            image_bytes = body
        if not side:
            raise ValidationError("missing 'side' (multipart field or query parameter)", stage="service")
        if not image_bytes:
            raise ValidationError("empty image upload", stage="service")
        try:
            img = RawImage.open(io.BytesIO(image_bytes))
        except Exception:
            raise ValidationError("could not decode image (PNG or JPEG expected)", stage="preprocess") from None
        profile = scan_profile(img, side, PipelineConfig())
        with session.lock:
            session.state.set_profile(profile)
        return _profile_summary(profile)

    @app.put("/sessions/{sid}/profiles/{side}")
    async def put_profile(sid: str, side: str, request: Request):
        session = _session_or_404(sid)
        mask = BrickBitmask.from_text((await request.body()).decode("utf-8"))
        side_enum = Side.parse(side)
        _, count = connected_components(mask)
        warnings = ()
        if count > 1:
            warnings = (f"{DISCONNECTED_WARNING}: mask has {count} disconnected parts",)
        profile = Profile(mask, side_enum, warnings=warnings)
        with session.lock:
            session.state.set_profile(profile)
        return _profile_summary(profile)

    @app.post("/sessions/{sid}/reconstruct")
    async def reconstruct(sid: str, request: Request):
        session = _session_or_404(sid)
        doc = _json_body(await request.body())
        method = doc.get("method")
        if method not in stages.METHODS:
            raise ValidationError(f"method must be one of {stages.METHODS}, got {method!r}")
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise ValidationError("params must be an object")
        with session.lock:
            result = stages.run_method(session.state.profiles, method, params)
            session.results = [result]
            session.state.set_method(method, params)
            session.state.mesh_stages.clear()
            data = obj_bytes(result.mesh)
            session.state.append_stage(
                method, params, prj.profiles_digest(session.state.profiles), prj.mesh_digest(data)
            )
            stage_id = len(session.state.mesh_stages)
        return {"stage": stage_id, "warnings": list(result.mesh.warnings)}

    @app.post("/sessions/{sid}/post")
    async def post_op(sid: str, request: Request):
        session = _session_or_404(sid)
        doc = _json_body(await request.body())
        op = doc.get("operation")
        if op not in stages.POST_OPS:
            raise ValidationError(f"operation must be one of {stages.POST_OPS}, got {op!r}")
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise ValidationError("params must be an object")
        with session.lock:
            if not session.results:
                raise StateConflict("no reconstruction staged yet")
            result = stages.run_post(op, params, session.results[-1])
            session.results.append(result)
            data = obj_bytes(result.mesh)
            session.state.append_stage(
                op, params, session.state.mesh_stages[-1].digest, prj.mesh_digest(data)
            )
            stage_id = len(session.state.mesh_stages)
        return {"stage": stage_id, "warnings": list(result.mesh.warnings)}

    def _stage_mesh(session: Session, stage: int) -> TriangleMesh:
        with session.lock:
            if not (1 <= stage <= len(session.results)):
                raise _NotFound(f"unknown stage {stage}")
            return session.results[stage - 1].mesh

    @app.get("/sessions/{sid}/mesh/{stage}")
    def get_mesh(sid: str, stage: int, format: str = "obj"):
        session = _session_or_404(sid)
        mesh = _stage_mesh(session, stage)
        if format == "obj":
            return Response(
                content=obj_bytes(mesh),
                media_type="model/obj",
                headers={"Content-Disposition": f"attachment; filename=stage{stage}.obj"},
            )
        if format == "json":
            return {
                "vertices": [round(float(v), 6) for v in mesh.vertices.ravel()],
                "triangles": [int(t) for t in mesh.triangles.ravel()],
                "warnings": list(mesh.warnings),
            }
        raise ValidationError(f"format must be obj or json, got {format!r}")

    @app.get("/sessions/{sid}/analyze/{stage}")
    def analyze_stage(sid: str, stage: int, up_axis: str = "y"):
        session = _session_or_404(sid)
        mesh = _stage_mesh(session, stage)
        report = analyze(mesh).to_dict()
        balance = balance_report(mesh, up_axis).to_dict() if report["watertight"] else None
        return {"analyze": report, "balance": balance, "warnings": list(mesh.warnings)}

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def _json_body(body: bytes) -> dict:
    import json

    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"malformed JSON body: {e}") from None
    if not isinstance(doc, dict):
        raise ParseError("request body must be a JSON object")
    return doc


def main(argv: list[str] | None = None) -> int:
    import argparse
    import os

    import uvicorn

    parser = argparse.ArgumentParser(prog="brickforge-serve")
    parser.add_argument("--host", default=os.environ.get("BRICKFORGE_HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(os.environ.get("BRICKFORGE_PORT", "8765")))
    parser.add_argument("--static-dir", default=os.environ.get("BRICKFORGE_STATIC"))
    args = parser.parse_args(argv)
    uvicorn.run(create_app(args.static_dir), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    main()
