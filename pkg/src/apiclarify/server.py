"""HTTP adapter over the clarification engine.

Thin by design: every response field is a direct serialization of an
engine value. Sessions live in memory with an idle TTL and are removed
on DELETE or expiry; per-session writes are serialized, and a request
that loses the race gets a 409.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import (
    ClarificationEngine,
    EmptyAnswerError,
    EmptyQueryError,
    NoPendingQuestionError,
    RoundOutput,
    Session,
    SessionError,
    Variant,
)
from .gateway import GatewayError

DEFAULT_SESSION_TTL = 30 * 60.0


class CreateSessionBody(BaseModel):
    query: str
    variant: str = "full"


class AnswerBody(BaseModel):
    answer: str
    stop: bool = False


class SessionRegistry:
    """In-memory session map with lazy idle expiry."""

    def __init__(self, ttl: float = DEFAULT_SESSION_TTL):
        self.ttl = ttl
        self._lock = threading.Lock()
        self._sessions: dict[str, tuple[Session, float]] = {}

    def put(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = (session, time.monotonic())

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            self._purge()
            entry = self._sessions.get(session_id)
            if entry is None:
                return None
            session, _ = entry
            self._sessions[session_id] = (session, time.monotonic())
            return session

    def remove(self, session_id: str) -> Session | None:
        with self._lock:
            entry = self._sessions.pop(session_id, None)
            return entry[0] if entry else None

    def _purge(self) -> None:
        now = time.monotonic()
        expired = [sid for sid, (_, seen) in self._sessions.items() if now - seen > self.ttl]
        for sid in expired:
            del self._sessions[sid]


def _round_payload(out: RoundOutput) -> dict:
    return {
        "aspect": out.aspect.value,
        "question": out.question,
        "options": list(out.options.options),
    }


def _error(status: int, kind: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": kind, "detail": detail})


def create_app(
    engine: ClarificationEngine,
    *,
    session_ttl: float = DEFAULT_SESSION_TTL,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="apiclarify")
    registry = SessionRegistry(ttl=session_ttl)
    app.state.engine = engine
    app.state.registry = registry

    @app.exception_handler(GatewayError)
    async def gateway_error_handler(_request: Request, exc: GatewayError):
        return _error(502, exc.kind, str(exc))

    @app.post("/v1/sessions")
    def create_session(body: CreateSessionBody):
        try:
            variant = Variant(body.variant)
        except ValueError:
            return _error(400, "bad-variant", f"unknown variant {body.variant!r}")
        try:
            session = engine.start_session(body.query, variant)
        except EmptyQueryError as exc:
            return _error(400, "empty-query", str(exc))
        out = engine.next_question(session)
        registry.put(session)
        return {
            "session_id": session.id,
            "round": session.round,
            **_round_payload(out),
        }

    @app.post("/v1/sessions/{session_id}/answers")
    def submit_answer(session_id: str, body: AnswerBody):
        session = registry.get(session_id)
        if session is None:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        if not session.lock.acquire(blocking=False):
            return _error(409, "busy", "another request holds this session")
        try:
            try:
                extended, recommendations = engine.submit_answer(session, body.answer)
            except NoPendingQuestionError as exc:
                return _error(409, "no-pending-question", str(exc))
            except EmptyAnswerError as exc:
                return _error(400, "empty-answer", str(exc))
            next_payload = None
            if not body.stop and session.round < session.cfg.max_rounds:
                next_payload = _round_payload(engine.next_question(session))
            return {
                "extended_query": extended,
                "recommendations": list(recommendations.apis),
                "next": next_payload,
            }
        finally:
            session.lock.release()

    @app.get("/v1/sessions/{session_id}/transcript")
    def get_transcript(session_id: str):
        session = registry.get(session_id)
        if session is None:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        return engine.build_transcript(session).to_dict()

    @app.delete("/v1/sessions/{session_id}")
    def delete_session(session_id: str):
        session = registry.remove(session_id)
        if session is None:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        try:
            transcript = engine.end_session(session)
        except SessionError:
            transcript = engine.build_transcript(session)
        return transcript.to_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
