"""HTTP/JSON API over the session service.

POST   /api/sessions                     multipart: metadata JSON + audio WAV
GET    /api/sessions/{id}                lifecycle + latest progress
GET    /api/sessions/{id}/events         server-sent progress events
GET    /api/sessions/{id}/results        full result document
GET    /api/sessions/{id}/chunks/{n}/audio  audio/wav
POST   /api/sessions/{id}/upgrade        classification-only -> full (202)
POST   /api/sessions/{id}/review         {action, feedback?, clinicianId}
GET    /api/sessions/{id}/export         text/html
"""

from __future__ import annotations

import json
from typing import Optional

from fastapi import FastAPI, File, Form, HTTPException, Response, UploadFile
from fastapi.responses import HTMLResponse, StreamingResponse
from pydantic import BaseModel, ValidationError

from .review import InvalidAction, MissingFeedback, ReviewAction, ReviewActionType
from .segmenter import BadAudio, EmptyAudio
from .service import (
    BadConfig,
    ChunkOutOfRange,
    InvalidState,
    NotFound,
    SessionService,
)


class ReviewRequest(BaseModel):
    action: ReviewActionType
    feedback: Optional[str] = None
    clinicianId: str


def create_app(service: SessionService) -> FastAPI:
    app = FastAPI(title="speechplan")
    app.state.service = service

    @app.post("/api/sessions", status_code=201)
    async def create_session(
        metadata: str = Form(...),
        audio: UploadFile = File(...),
    ):
        try:
            meta = json.loads(metadata)
        except json.JSONDecodeError as exc:
            raise HTTPException(400, f"metadata is not valid JSON: {exc}")
        audio_bytes = await audio.read()
        try:
            session_id = service.create_session(
                mode=meta.get("mode", "full"),
                patient=meta.get("patient", {}),
                seg_config=meta.get("seg_config", {}),
                orch_config=meta.get("orch_config", {}),
                audio_bytes=audio_bytes,
            )
        except (BadAudio, EmptyAudio) as exc:
            raise HTTPException(400, f"bad audio: {exc}")
        except BadConfig as exc:
            raise HTTPException(400, f"bad config: {exc}")
        return {"sessionId": session_id}

    @app.get("/api/sessions/{session_id}")
    def get_status(session_id: str):
        try:
            return service.get_status(session_id)
        except NotFound:
            raise HTTPException(404, "session not found")

    @app.get("/api/sessions/{session_id}/events")
    def get_events(session_id: str):
        try:
            events = service.get_progress_events(session_id)
        except NotFound:
            raise HTTPException(404, "session not found")

        def stream():
            for ev in events:
                yield f"data: {ev.model_dump_json()}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/api/sessions/{session_id}/results")
    def get_results(session_id: str):
        try:
            return service.get_results(session_id)
        except NotFound:
            raise HTTPException(404, "session not found")
        except InvalidState as exc:
            raise HTTPException(409, str(exc))

    @app.get("/api/sessions/{session_id}/chunks/{n}/audio")
    def get_chunk_audio(session_id: str, n: int):
        try:
            wav = service.get_chunk_audio(session_id, n)
        except NotFound:
            raise HTTPException(404, "session not found")
        except ChunkOutOfRange as exc:
            raise HTTPException(404, f"chunk out of range: {exc}")
        return Response(content=wav, media_type="audio/wav")

    @app.post("/api/sessions/{session_id}/upgrade", status_code=202)
    def upgrade(session_id: str):
        try:
            service.upgrade_session(session_id)
        except NotFound:
            raise HTTPException(404, "session not found")
        except InvalidState as exc:
            raise HTTPException(409, str(exc))
        return {"status": "accepted"}

    @app.post("/api/sessions/{session_id}/review")
    def review(session_id: str, body: ReviewRequest):
        try:
            action = ReviewAction(
                action=body.action,
                feedback=body.feedback,
                clinician_id=body.clinicianId,
            )
        except (MissingFeedback, ValidationError) as exc:
            raise HTTPException(400, f"invalid review action: {exc}")
        try:
            lifecycle = service.post_review(session_id, action)
        except NotFound:
            raise HTTPException(404, "session not found")
        except InvalidAction as exc:
            raise HTTPException(409, str(exc))
        return {"lifecycle": lifecycle.value}

    @app.get("/api/sessions/{session_id}/export")
    def export(session_id: str):
        try:
            html = service.export_html(session_id)
        except NotFound:
            raise HTTPException(404, "session not found")
        except InvalidState as exc:
            raise HTTPException(409, str(exc))
        return HTMLResponse(content=html)

    return app
