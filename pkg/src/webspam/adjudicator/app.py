"""HTTP surface of the adjudication service.

POST /api/session                     -> {"session_id": ...}
GET  /api/session/{id}/next?assessor= -> task with a page content URL, or done
GET  /api/page/{task_id}              -> sanitized page bytes
POST /api/judgment                    -> ack
GET  /api/session/{id}/progress       -> counts
"""

from __future__ import annotations

import re
from typing import Dict, Optional

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from webspam.adjudicator.store import (
    AdjudicationStore,
    JudgmentRecord,
    LeaseConflictError,
    UnknownSessionError,
)

_SCRIPT_RE = re.compile(rb"<script\b.*?(?:</script\s*>|$)", re.IGNORECASE | re.DOTALL)
_EVENT_ATTR_RE = re.compile(rb"\son\w+\s*=\s*(?:\"[^\"]*\"|'[^']*'|[^\s>]+)", re.IGNORECASE)
_CSP = "default-src 'none'; style-src 'unsafe-inline'; img-src data:"


def sanitize_page(data: bytes) -> bytes:
    """Strip script tags and inline event handlers from archived content."""
    data = _SCRIPT_RE.sub(b"", data)
    return _EVENT_ATTR_RE.sub(b"", data)


class SampleSpec(BaseModel):
    size: int = Field(ge=0)
    seed: int = 0
    with_replacement: bool = True


class SessionCreated(BaseModel):
    session_id: str


class TaskResponse(BaseModel):
    done: bool = False
    task_id: Optional[str] = None
    doc_id: Optional[str] = None
    topic: Optional[str] = None
    page_url: Optional[str] = None


class JudgmentBody(BaseModel):
    task_id: str
    doc_id: str
    assessor: str
    label: str
    elapsed_ms: int = Field(ge=0)
    override: bool = False


class Ack(BaseModel):
    ok: bool = True


class ProgressResponse(BaseModel):
    judged: int
    remaining: int
    tallies: Dict[str, int]
    mean_elapsed_ms: float


def create_app(store: AdjudicationStore) -> FastAPI:
    app = FastAPI(title="webspam adjudicator")
    app.state.store = store

    @app.post("/api/session", response_model=SessionCreated)
    def create_session(spec: SampleSpec):
        try:
            session_id = store.create_session(
                spec.size, spec.seed, spec.with_replacement
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return SessionCreated(session_id=session_id)

    @app.get("/api/session/{session_id}/next", response_model=TaskResponse)
    def next_task(session_id: str, assessor: str):
        try:
            task = store.next_task(session_id, assessor)
        except UnknownSessionError:
            raise HTTPException(status_code=404, detail="unknown session")
        if task is None:
            return TaskResponse(done=True)
        return TaskResponse(
            task_id=task.task_id,
            doc_id=task.doc_id,
            topic=task.topic,
            page_url=f"/api/page/{task.task_id}",
        )

    @app.get("/api/page/{task_id}")
    def page(task_id: str):
        task = store.find_task(task_id)
        if task is None:
            raise HTTPException(status_code=404, detail="unknown task")
        data = store.pages.get(task.doc_id)
        if data is None:
            raise HTTPException(status_code=404, detail="page bytes unavailable")
        return Response(
            content=sanitize_page(data),
            media_type="text/html",
            headers={"Content-Security-Policy": _CSP},
        )

    @app.post("/api/judgment", response_model=Ack)
    def judgment(body: JudgmentBody):
        record = JudgmentRecord(
            task_id=body.task_id,
            doc_id=body.doc_id,
            assessor=body.assessor,
            label=body.label,
            elapsed_ms=body.elapsed_ms,
        )
        try:
            store.submit(record, override=body.override)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except LeaseConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except UnknownSessionError:
            raise HTTPException(status_code=404, detail="unknown task")
        return Ack()

    @app.get("/api/session/{session_id}/progress", response_model=ProgressResponse)
    def progress(session_id: str):
        try:
            return ProgressResponse(**store.progress(session_id))
        except UnknownSessionError:
            raise HTTPException(status_code=404, detail="unknown session")

    return app
