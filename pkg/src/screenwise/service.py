"""HTTP facade over policy execution and inspection.

The API is versioned under /api/v1 and keeps sessions in memory with a TTL.
The policy is immutable and shared; each session has its own lock so
concurrent outcome posts to one session serialize (exactly one wins per
awaited test) while distinct sessions proceed fully in parallel.

No authentication: this service is a research artifact and must not be
exposed to real patient data or untrusted networks.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from .errors import (
    NonNumericValueError,
    SchemaMismatchError,
    SessionFinalError,
    UnknownFeatureError,
    WrongTestError,
)
from .model import normalize_features, parse_birads
from .policy import (
    PartitionedPolicy,
    Session,
    advance_session,
    policy_to_dict,
    start_session,
)

DEFAULT_TTL_SECONDS = 24 * 60 * 60


def _error(status: int, code: str, message: str, detail: Any = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail},
    )


@dataclass
class _Entry:
    session: Session
    created: float
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """In-memory session map with TTL-based purging."""

    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS):
        self.ttl = ttl_seconds
        self._entries: dict[str, _Entry] = {}
        self._lock = threading.Lock()
        self.created_total = 0
        self.outcomes_total = 0
        self.finals_total = 0

    def purge(self, now: float | None = None) -> None:
        now = time.time() if now is None else now
        with self._lock:
            expired = [
                sid
                for sid, entry in self._entries.items()
                if now - entry.created > self.ttl
            ]
            for sid in expired:
                del self._entries[sid]

    def add(self, session: Session) -> None:
        with self._lock:
            self._entries[session.session_id] = _Entry(
                session=session, created=time.time()
            )
            self.created_total += 1

    def entry(self, session_id: str) -> _Entry | None:
        self.purge()
        with self._lock:
            return self._entries.get(session_id)

    def replace(self, session: Session) -> None:
        with self._lock:
            entry = self._entries.get(session.session_id)
            if entry is not None:
                entry.session = session

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def snapshot(self) -> list[dict[str, Any]]:
        with self._lock:
            return [_session_view(e.session) for e in self._entries.values()]


def _session_view(session: Session) -> dict[str, Any]:
    lo, hi = session.diagnosis_interval
    return {
        "session_id": session.session_id,
        "partition_id": session.partition_id,
        "status": session.status,
        "recommended_test": session.pending_test,
        "final_label": session.final_label,
        "diagnosis": {
            "label": session.diagnosis_label,
            "interval": [lo, hi],
        },
        "cost": session.cost,
        "history": [
            {"test": test, "birads": score.value} for test, score in session.history
        ],
    }


def create_app(
    policy: PartitionedPolicy | None,
    ttl_seconds: float = DEFAULT_TTL_SECONDS,
    snapshot_path: str | None = None,
    console_dir: str | None = None,
) -> FastAPI:
    store = SessionStore(ttl_seconds=ttl_seconds)

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        if snapshot_path:
            with open(snapshot_path, "w", encoding="utf-8") as handle:
                json.dump(store.snapshot(), handle, indent=2)

    app = FastAPI(title="screenwise", version="1", lifespan=lifespan)
    app.state.policy = policy
    app.state.store = store

    def no_policy() -> JSONResponse:
        return _error(409, "no_policy", "no policy loaded")

    @app.get("/api/v1/health")
    def health() -> dict[str, Any]:
        return {"status": "ok", "policy_loaded": app.state.policy is not None}

    @app.get("/api/v1/metrics")
    def metrics() -> dict[str, Any]:
        return {
            "sessions_active": len(store),
            "sessions_created": store.created_total,
            "outcomes_posted": store.outcomes_total,
            "finals_issued": store.finals_total,
        }

    @app.get("/api/v1/policy")
    def get_policy():
        if app.state.policy is None:
            return no_policy()
        return policy_to_dict(app.state.policy)

    @app.post("/api/v1/sessions")
    async def create_session(request: Request):
        if app.state.policy is None:
            return no_policy()
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _error(400, "bad_json", "request body is not valid JSON")
        features = body.get("features") if isinstance(body, dict) else None
        if not isinstance(features, dict):
            return _error(400, "bad_request", 'body must carry a "features" object')
        try:
            x = normalize_features(features, app.state.policy.schema)
        except (UnknownFeatureError, NonNumericValueError, SchemaMismatchError) as exc:
            return _error(400, "bad_features", str(exc))
        session = start_session(x, app.state.policy, session_id=uuid.uuid4().hex)
        store.add(session)
        return JSONResponse(status_code=201, content=_session_view(session))

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: str):
        entry = store.entry(session_id)
        if entry is None:
            return _error(404, "not_found", f"no session {session_id}")
        return _session_view(entry.session)

    @app.post("/api/v1/sessions/{session_id}/outcomes")
    async def post_outcome(session_id: str, request: Request):
        entry = store.entry(session_id)
        if entry is None:
            return _error(404, "not_found", f"no session {session_id}")
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _error(400, "bad_json", "request body is not valid JSON")
        if not isinstance(body, dict) or "test" not in body or "birads" not in body:
            return _error(400, "bad_request", 'body must carry "test" and "birads"')
        try:
            score = parse_birads(str(body["birads"]))
        except ValueError as exc:
            return _error(400, "bad_birads", str(exc))
        if score is None:
            return _error(
                400, "bad_birads", "score 0/empty is an incomplete study, not an outcome"
            )
        with entry.lock:
            try:
                session = advance_session(entry.session, str(body["test"]), score)
            except WrongTestError as exc:
                return _error(409, "wrong_test", str(exc))
            except SessionFinalError as exc:
                return _error(409, "session_final", str(exc))
            entry.session = session
            store.outcomes_total += 1
            if session.is_final:
                store.finals_total += 1
        return _session_view(session)

    if console_dir:
        index = os.path.join(console_dir, "index.html")
        assets = os.path.realpath(os.path.join(console_dir, "assets"))

        @app.get("/")
        def console_index():
            return FileResponse(index)

        @app.get("/assets/{path:path}")
        def console_asset(path: str):
            target = os.path.realpath(os.path.join(assets, path))
            if not target.startswith(assets + os.sep) or not os.path.isfile(target):
                return _error(404, "not_found", "no such asset")
            return FileResponse(target)

    return app
