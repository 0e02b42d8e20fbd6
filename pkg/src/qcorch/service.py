"""Network API the UI consumes: session lifecycle, targeted messages, ordered
event streaming with a resumable cursor, pause/resume with breakpoints, file
browsing, graph view, and notebook export."""

from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse, Response
from pydantic import BaseModel

from qcorch.agents import HierarchyError, RunController, Session, SessionResult
from qcorch.config import SessionConfig, build_session, load_config
from qcorch.trace import export_log, export_notebook

EVENT_KINDS = {"commanding", "reporting", "acting", "user", "system"}


class ManagedSession:
    """One running session plus its thread, controller, and lifecycle state."""

    def __init__(self, session_id: str, session: Session, task: str):
        self.id = session_id
        self.session = session
        self.task = task
        self.controller: RunController = session.controller
        self.result: Optional[SessionResult] = None
        self.created = time.time()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self):
        self._thread.start()

    def _run(self):
        self.result = self.session.run(self.task)

    @property
    def state(self) -> str:
        if self.result is not None:
            return self.result.status  # done | failed | budget_exceeded
        return "paused" if self.controller.paused else "running"

    @property
    def finished(self) -> bool:
        return self.result is not None

    def wait(self, timeout: Optional[float] = None) -> bool:
        self._thread.join(timeout)
        return not self._thread.is_alive()

    def summary(self) -> dict:
        return {
            "id": self.id,
            "state": self.state,
            "created": self.created,
            "task": self.task,
            "workdir": str(self.session.workdir),
            "breakpoints": sorted(self.controller.breakpoints),
            "counters": self.session.trace.counters(),
        }


class SessionManager:
    def __init__(self, config: SessionConfig, sessions_dir: Path):
        self.config = config
        self.sessions_dir = Path(sessions_dir)
        self.sessions: dict[str, ManagedSession] = {}
        self._lock = threading.Lock()

    def create(self, task: str, paused: bool = False) -> ManagedSession:
        session_id = uuid.uuid4().hex[:12]
        controller = RunController()
        if paused:
            controller.pause()
        session = build_session(
            self.config, session_id, self.sessions_dir / session_id, controller=controller
        )
        managed = ManagedSession(session_id, session, task)
        with self._lock:
            self.sessions[session_id] = managed
        managed.start()
        return managed

    def get(self, session_id: str) -> ManagedSession:
        with self._lock:
            if session_id not in self.sessions:
                raise KeyError(session_id)
            return self.sessions[session_id]

    def all(self) -> list[ManagedSession]:
        with self._lock:
            return list(self.sessions.values())


class CreateSessionBody(BaseModel):
    task: str
    paused: bool = False


class MessageBody(BaseModel):
    agent: str
    text: str


class BreakpointBody(BaseModel):
    agent: str
    kind: str


def create_app(config: SessionConfig, sessions_dir: Path) -> FastAPI:
    app = FastAPI(title="qcorch session service")
    manager = SessionManager(config, sessions_dir)
    app.state.manager = manager

    def managed(session_id: str) -> ManagedSession:
        try:
            return manager.get(session_id)
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}") from None

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        try:
            m = manager.create(body.task, paused=body.paused)
        except (HierarchyError, ValueError) as e:
            raise HTTPException(400, f"invalid configuration: {e}") from None
        return m.summary()

    @app.get("/sessions")
    def list_sessions():
        return [m.summary() for m in manager.all()]

    @app.get("/sessions/{session_id}")
    def session_detail(session_id: str):
        m = managed(session_id)
        detail = m.summary()
        if m.result is not None:
            detail["result"] = m.result.to_dict()
        return detail

    @app.post("/sessions/{session_id}/message")
    def post_message(session_id: str, body: MessageBody):
        m = managed(session_id)
        try:
            m.session.post_message(body.agent, body.text)
        except HierarchyError as e:
            raise HTTPException(404, str(e)) from None
        return {"queued": True}

    @app.get("/sessions/{session_id}/events")
    def events(
        session_id: str,
        after: int = 0,
        agent: Optional[str] = None,
        kind: Optional[str] = None,
        wait_s: float = Query(0.0, ge=0.0, le=30.0),
    ):
        m = managed(session_id)
        if kind is not None and kind not in EVENT_KINDS:
            raise HTTPException(400, f"unknown event kind {kind!r}")
        deadline = time.time() + wait_s

        def snapshot():
            items = m.session.trace.events(after=after)
            if agent:
                items = [e for e in items if e.agent == agent]
            if kind:
                items = [e for e in items if e.kind.value == kind]
            return items

        items = snapshot()
        while not items and time.time() < deadline and not m.finished:
            time.sleep(0.05)
            items = snapshot()
        last_seq = m.session.trace.events()[-1].seq if m.session.trace.events() else 0
        return {
            "events": [json.loads(e.to_json()) for e in items],
            "cursor": max([e.seq for e in items], default=after),
            "head": last_seq,
            "state": m.state,
        }

    @app.post("/sessions/{session_id}/pause")
    def pause(session_id: str):
        m = managed(session_id)
        if m.finished:
            raise HTTPException(409, f"session already {m.state}")
        m.controller.pause()
        return {"state": m.state}

    @app.post("/sessions/{session_id}/resume")
    def resume(session_id: str):
        m = managed(session_id)
        if m.finished:
            raise HTTPException(409, f"session already {m.state}")
        m.controller.resume()
        return {"state": m.state}

    @app.post("/sessions/{session_id}/breakpoints")
    def add_breakpoint(session_id: str, body: BreakpointBody):
        m = managed(session_id)
        if body.kind not in EVENT_KINDS:
            raise HTTPException(400, f"unknown event kind {body.kind!r}")
        if not m.session.hierarchy.is_agent(body.agent):
            raise HTTPException(404, f"unknown agent {body.agent!r}")
        m.controller.breakpoints.add((body.agent, body.kind))
        return {"breakpoints": sorted(m.controller.breakpoints)}

    @app.delete("/sessions/{session_id}/breakpoints")
    def clear_breakpoints(session_id: str):
        m = managed(session_id)
        m.controller.breakpoints.clear()
        return {"breakpoints": []}

    @app.get("/sessions/{session_id}/graph")
    def graph(session_id: str):
        m = managed(session_id)
        hierarchy = m.session.hierarchy
        last_event: dict[str, dict] = {}
        for e in m.session.trace.events():
            if e.agent in hierarchy.agents:
                last_event[e.agent] = {"kind": e.kind.value, "ts": e.timestamp, "seq": e.seq}
        nodes = [
            {
                "id": a.id,
                "depth": hierarchy.depth(a.id),
                "forgetful": a.forgetful,
                "tools": [t for t in a.callable_modules if not hierarchy.is_agent(t)],
                "last_event": last_event.get(a.id),
            }
            for a in hierarchy.agents.values()
        ]
        return {
            "root": hierarchy.root_id,
            "nodes": nodes,
            "edges": [{"from": p, "to": c} for p, c in hierarchy.edges()],
            "state": m.state,
        }

    @app.get("/sessions/{session_id}/files")
    def files(session_id: str, path: str = "."):
        m = managed(session_id)
        workdir = m.session.workdir.resolve()
        target = (workdir / path).resolve()
        if target != workdir and workdir not in target.parents:
            raise HTTPException(403, "path escapes the session workdir")
        if not target.exists():
            raise HTTPException(404, f"no such path {path!r}")
        if target.is_dir():
            entries = [
                {
                    "name": p.name,
                    "kind": "dir" if p.is_dir() else "file",
                    "size": p.stat().st_size if p.is_file() else 0,
                }
                for p in sorted(target.iterdir(), key=lambda p: p.name)
            ]
            return {"kind": "dir", "path": path, "entries": entries}
        return {"kind": "file", "path": path, "content": target.read_text()}

    @app.get("/sessions/{session_id}/export/notebook")
    def notebook(session_id: str):
        m = managed(session_id)
        try:
            document = export_notebook(m.session.trace)
        except ValueError as e:
            raise HTTPException(409, str(e)) from None
        return Response(
            content=json.dumps(document, indent=1),
            media_type="application/x-ipynb+json",
            headers={
                "Content-Disposition": f'attachment; filename="session_{session_id}.ipynb"'
            },
        )

    @app.get("/sessions/{session_id}/export/log")
    def log(session_id: str):
        m = managed(session_id)
        return PlainTextResponse(export_log(m.session.trace))

    ui_dir = Path(__file__).parent / "data" / "ui"
    if ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.get("/")
    def index():
        if ui_dir.is_dir():
            return HTMLResponse(
                '<meta http-equiv="refresh" content="0; url=/ui/">'
                '<a href="/ui/">qcorch console</a>'
            )
        return JSONResponse({"service": "qcorch", "sessions": len(manager.all())})

    return app


def serve(config_path: str, sessions_dir: str, host: str = "127.0.0.1", port: int = 8471):
    import uvicorn

    config = load_config(config_path)
    app = create_app(config, Path(sessions_dir))
    uvicorn.run(app, host=host, port=port, log_level="warning")
