"""HTTP delivery: session lifecycle, protocol events, SSE stream, file exports.

Thin layer over the session engine; endpoints run in the server's worker
threads and the per-session lock serializes mutation, so a run can stream
its events to one request while another drives it.
"""
from __future__ import annotations

import functools
import json
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse, StreamingResponse

from .decisions import InvariantViolation, ParseFailure
from .gateway import GatewayError
from .protocol import (
    BeginSimulation,
    CompleteIntegration,
    CompleteReflection,
    ExportBeforeCompletion,
    CompanionUnavailable,
    IllegalTransition,
    SimulationEnded,
)
from .session import (
    Session,
    SessionConfig,
    SessionStateError,
    SessionStatus,
    begin_default_role,
    create_session,
)


class SessionStore:
    def __init__(self, out_root: str | Path | None = None):
        self.out_root = out_root
        self.sessions: dict[str, Session] = {}

    def create(self, config: SessionConfig) -> Session:
        session = create_session(config, out_root=self.out_root)
        self.sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session


def _engine_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SessionStateError, IllegalTransition, CompanionUnavailable, ExportBeforeCompletion) as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except (ValueError, ParseFailure, InvariantViolation, KeyError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except GatewayError as exc:
            raise HTTPException(status_code=502, detail=str(exc))

    return wrapper


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="hopesim", version="0.1.0")
    store = store or SessionStore()
    app.state.store = store

    @app.post("/sessions")
    @_engine_errors
    def create(payload: dict = Body(default={})):
        config = SessionConfig.from_dict(payload)
        session = store.create(config)
        return {"id": session.id, "status": session.status.value}

    @app.get("/sessions/{session_id}")
    def snapshot(session_id: str):
        return store.get(session_id).snapshot()

    @app.post("/sessions/{session_id}/events/begin")
    @_engine_errors
    def begin(session_id: str, payload: dict = Body(default={})):
        session = store.get(session_id)
        role = payload.get("role") or begin_default_role(session)
        status = session.handle_protocol_event(BeginSimulation(role))
        return {"status": status.value, "role": role}

    @app.post("/sessions/{session_id}/events/simulation-ended")
    @_engine_errors
    def simulation_ended(session_id: str):
        status = store.get(session_id).handle_protocol_event(SimulationEnded())
        return {"status": status.value}

    @app.post("/sessions/{session_id}/events/complete-reflection")
    @_engine_errors
    def complete_reflection(session_id: str, payload: dict = Body(...)):
        event = CompleteReflection(
            choice=payload.get("choice", ""), new_role=payload.get("new_role")
        )
        status = store.get(session_id).handle_protocol_event(event)
        return {"status": status.value}

    @app.post("/sessions/{session_id}/events/complete-integration")
    @_engine_errors
    def complete_integration(session_id: str):
        status = store.get(session_id).handle_protocol_event(CompleteIntegration())
        return {"status": status.value}

    @app.post("/sessions/{session_id}/run")
    @_engine_errors
    def run(session_id: str):
        session = store.get(session_id)
        status = session.run_until_pause()
        return {"status": status.value, "awaiting": session.snapshot()["awaiting"]}

    @app.post("/sessions/{session_id}/decision")
    @_engine_errors
    def decision(session_id: str, payload: dict = Body(...)):
        status = store.get(session_id).submit_human_decision(payload.get("text", ""))
        return {"status": status.value}

    @app.post("/sessions/{session_id}/reflection/message")
    @_engine_errors
    def reflection_message(session_id: str, payload: dict = Body(...)):
        reply = store.get(session_id).reflect(payload.get("text", ""))
        return {"reply": reply}

    @app.post("/sessions/{session_id}/focus")
    @_engine_errors
    def focus(session_id: str, payload: dict = Body(...)):
        analysis = store.get(session_id).set_focus(list(payload.get("columns", [])))
        return {"analysis": analysis}

    @app.post("/sessions/{session_id}/assistant/message")
    @_engine_errors
    def assistant_message(session_id: str, payload: dict = Body(...)):
        reply, calls = store.get(session_id).assistant_message(payload.get("text", ""))
        return {
            "reply": reply,
            "tool_calls": [
                {"tool": c.tool, "arguments": c.arguments, "result": c.result} for c in calls
            ],
        }

    @app.post("/sessions/{session_id}/assistant/report")
    @_engine_errors
    def assistant_report(session_id: str):
        draft = store.get(session_id).generate_report()
        return {"draft": draft}

    @app.get("/sessions/{session_id}/stream")
    def stream(session_id: str, cursor: int = Query(default=0)):
        session = store.get(session_id)

        def sse():
            for event in session.iter_events(cursor=cursor, timeout=300.0):
                yield f"id: {event.seq}\nevent: {event.kind}\ndata: {json.dumps(event.payload)}\n\n"
            yield "event: close\ndata: {}\n\n"

        return StreamingResponse(
            sse(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    @app.get("/sessions/{session_id}/series.csv", response_class=PlainTextResponse)
    def series_csv(session_id: str):
        session = store.get(session_id)
        if not session.csv_path.exists():
            raise HTTPException(status_code=404, detail="no episode has started")
        return session.csv_path.read_text(encoding="utf-8")

    @app.get("/sessions/{session_id}/transcript.jsonl", response_class=PlainTextResponse)
    def transcript_jsonl(session_id: str):
        session = store.get(session_id)
        if not session.transcript_path.exists():
            raise HTTPException(status_code=404, detail="no episode has started")
        return session.transcript_path.read_text(encoding="utf-8")

    @app.get("/sessions/{session_id}/export.md", response_class=PlainTextResponse)
    @_engine_errors
    def export_md(session_id: str):
        return store.get(session_id).export_reflections()

    return app
