"""Append-only JSON-lines persistence for sessions.

Each session owns a directory under ``<data_dir>/sessions/<id>/`` holding
the uploaded ``audio.wav`` and an ``events.jsonl`` log. State is rebuilt by
replaying the log; sessions whose last lifecycle was in-flight are marked
Failed(interrupted) on reload.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from .models import utc_now


class SessionStore:
    def __init__(self, data_dir: str | os.PathLike):
        self.root = Path(data_dir) / "sessions"
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def create(self, session_id: str, audio_bytes: bytes) -> None:
        d = self.session_dir(session_id)
        d.mkdir(parents=True, exist_ok=False)
        (d / "audio.wav").write_bytes(audio_bytes)

    def read_audio(self, session_id: str) -> bytes:
        return (self.session_dir(session_id) / "audio.wav").read_bytes()

    def append_event(self, session_id: str, event_type: str, payload: dict) -> None:
        record = {"type": event_type, "ts": utc_now().isoformat(), **payload}
        line = json.dumps(record, ensure_ascii=False, sort_keys=True)
        path = self.session_dir(session_id) / "events.jsonl"
        with self._lock:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def read_events(self, session_id: str) -> list[dict]:
        path = self.session_dir(session_id) / "events.jsonl"
        if not path.exists():
            return []
        events = []
        for line in path.read_text("utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError:
                # Torn tail write after a crash: ignore the partial line.
                continue
        return events

    def list_sessions(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())
