"""Session lifecycle service: submission, background processing, caching
upgrade, clinician review, and result assembly.

Each session's pipeline runs sequentially on a worker thread; many sessions
may run concurrently. Lifecycle transitions happen under a per-session lock
(compare-and-set semantics); stale actions fail with InvalidState or
InvalidAction instead of clobbering newer state. Backends are initialized
once at service startup and shared across sessions.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from .analysis import (
    MockClassifier,
    MockPhonemizer,
    MockTranscriber,
    RemoteClassifier,
    RemoteTranscriber,
    SeverityThresholds,
    aggregate,
    classify_all,
)
from .config import Settings
from .llm import ChatBackend, make_chat_backend
from .models import (
    AudioClip,
    ChunkAnalysis,
    GenerationRecord,
    OverallClassification,
    PatientProfile,
    SegmentationConfig,
    TherapyPlan,
    utc_now,
    validate_plan,
)
from .orchestrator import (
    LoopResult,
    OrchestrationConfig,
    RefinementFailed,
    apply_human_revision,
    run_loop,
)
from .prompts import PromptContext
from .review import (
    AuditEntry,
    Effect,
    InvalidAction,
    ReviewAction,
    ReviewMachine,
    ReviewState,
    ReviewStatus,
)
from .segmenter import read_wav, segment, write_wav
from .store import SessionStore


class SessionMode(str, Enum):
    CLASSIFICATION_ONLY = "classification_only"
    FULL = "full"


class Lifecycle(str, Enum):
    QUEUED = "Queued"
    PROCESSING = "Processing"
    RESULTS_READY = "ResultsReady"
    PENDING_REVIEW = "PendingReview"
    REVISING = "Revising"
    APPROVED = "Approved"
    REJECTED = "Rejected"
    FAILED = "Failed"


#: Pipeline stage order; progress events must respect it.
STAGE_ORDER = (
    "segmenting", "classifying", "transcribing",
    "generating", "critiquing", "refining", "exporting",
)


class ProgressEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    stage: str
    progress: float
    message: str = ""


class NotFound(KeyError):
    pass


class InvalidState(RuntimeError):
    pass


class ChunkOutOfRange(IndexError):
    pass


class BadConfig(ValueError):
    pass


class Session:
    """Mutable in-memory record for one session."""

    def __init__(self, session_id: str, mode: SessionMode, patient: PatientProfile,
                 seg_config: SegmentationConfig, orch_config: OrchestrationConfig):
        self.id = session_id
        self.mode = mode
        self.patient = patient
        self.seg_config = seg_config
        self.orch_config = orch_config
        self.created_at = utc_now()

        self.lifecycle = Lifecycle.QUEUED
        self.failure_reason: Optional[str] = None
        self.progress_events: list[ProgressEvent] = []

        self.clip: Optional[AudioClip] = None
        self.analyses: list[ChunkAnalysis] = []
        self.classification: Optional[OverallClassification] = None
        self.plan: Optional[TherapyPlan] = None
        self.history: list[GenerationRecord] = []
        self.red_flag = False
        self.degraded = False
        self.review = ReviewMachine()

        self.lock = threading.Lock()

    @property
    def latest_event(self) -> Optional[ProgressEvent]:
        return self.progress_events[-1] if self.progress_events else None


class SessionService:
    def __init__(
        self,
        settings: Settings | None = None,
        classifier=None,
        transcriber=None,
        phonemizer=None,
        chat_backend_factory: Optional[Callable[[str], ChatBackend]] = None,
        thresholds: SeverityThresholds | None = None,
        auto_process: bool = True,
    ):
        self.settings = settings or Settings()
        self.store = SessionStore(self.settings.data_dir)
        self.thresholds = thresholds or SeverityThresholds()
        self.auto_process = auto_process

        seed = self.settings.mock_seed
        if classifier is not None:
            self.classifier = classifier
        elif self.settings.classifier_endpoint:
            self.classifier = RemoteClassifier(self.settings.classifier_endpoint)
        else:
            self.classifier = MockClassifier(seed)
        if transcriber is not None:
            self.transcriber = transcriber
        elif self.settings.asr_endpoint:
            self.transcriber = RemoteTranscriber(self.settings.asr_endpoint)
        else:
            self.transcriber = MockTranscriber(seed)
        self.phonemizer = phonemizer if phonemizer is not None else MockPhonemizer(seed)

        if chat_backend_factory is not None:
            self._chat_factory = chat_backend_factory
        else:
            self._chat_factory = lambda sid: make_chat_backend(self.settings, seed=seed)

        self._sessions: dict[str, Session] = {}
        self._executor = ThreadPoolExecutor(max_workers=4)
        self._recover()

    # -- persistence ------------------------------------------------------

    def _emit(self, session: Session, stage: str, progress: float, message: str = "") -> None:
        event = ProgressEvent(stage=stage, progress=progress, message=message)
        session.progress_events.append(event)
        self.store.append_event(session.id, "progress", event.model_dump(mode="json"))

    def _set_lifecycle(self, session: Session, lifecycle: Lifecycle,
                       reason: str | None = None) -> None:
        session.lifecycle = lifecycle
        session.failure_reason = reason
        payload: dict = {"lifecycle": lifecycle.value}
        if reason:
            payload["reason"] = reason
        self.store.append_event(session.id, "lifecycle", payload)

    def _persist_analysis(self, session: Session) -> None:
        self.store.append_event(session.id, "analysis", {
            "analyses": [a.model_dump(mode="json") for a in session.analyses],
            "classification": session.classification.model_dump(mode="json"),
        })

    def _persist_plan(self, session: Session, result: LoopResult,
                      base_round: int) -> None:
        new_records = [
            rec.model_copy(update={"round": base_round + i})
            for i, rec in enumerate(result.history)
        ]
        session.history.extend(new_records)
        session.plan = result.final_plan
        session.red_flag = result.red_flag
        session.degraded = session.degraded or result.degraded
        self.store.append_event(session.id, "plan", {
            "plan": result.final_plan.model_dump(mode="json", by_alias=True),
            "history": [r.model_dump(mode="json") for r in new_records],
            "red_flag": result.red_flag,
            "degraded": result.degraded,
        })

    def _persist_review(self, session: Session, entry: AuditEntry) -> None:
        self.store.append_event(session.id, "review", {
            "entry": entry.model_dump(mode="json"),
            "state": session.review.state.model_dump(mode="json"),
        })

    def _recover(self) -> None:
        for sid in self.store.list_sessions():
            events = self.store.read_events(sid)
            if not events:
                continue
            session = self._replay(sid, events)
            if session is None:
                continue
            if session.lifecycle in (Lifecycle.QUEUED, Lifecycle.PROCESSING,
                                     Lifecycle.REVISING):
                self._set_lifecycle(session, Lifecycle.FAILED, "interrupted")
            self._sessions[sid] = session

    def _replay(self, sid: str, events: list[dict]) -> Optional[Session]:
        session: Optional[Session] = None
        for ev in events:
            kind = ev.get("type")
            if kind == "created":
                session = Session(
                    sid,
                    SessionMode(ev["mode"]),
                    PatientProfile.model_validate(ev["patient"]),
                    SegmentationConfig.model_validate(ev["seg_config"]),
                    OrchestrationConfig.model_validate(ev["orch_config"]),
                )
            elif session is None:
                continue
            elif kind == "lifecycle":
                session.lifecycle = Lifecycle(ev["lifecycle"])
                session.failure_reason = ev.get("reason")
            elif kind == "progress":
                session.progress_events.append(ProgressEvent(
                    stage=ev["stage"], progress=ev["progress"],
                    message=ev.get("message", ""),
                ))
            elif kind == "mode":
                session.mode = SessionMode(ev["mode"])
            elif kind == "analysis":
                session.analyses = [ChunkAnalysis.model_validate(a)
                                    for a in ev["analyses"]]
                session.classification = OverallClassification.model_validate(
                    ev["classification"])
            elif kind == "plan":
                session.plan = TherapyPlan.model_validate(ev["plan"])
                session.history.extend(GenerationRecord.model_validate(r)
                                       for r in ev["history"])
                session.red_flag = ev.get("red_flag", False)
                session.degraded = session.degraded or ev.get("degraded", False)
            elif kind == "review":
                session.review.audit_log.append(AuditEntry.model_validate(ev["entry"]))
                session.review.state = ReviewState.model_validate(ev["state"])
            elif kind == "review_state":
                session.review.state = ReviewState.model_validate(ev["state"])
        return session

    # -- lifecycle operations ---------------------------------------------

    def create_session(self, mode: SessionMode | str, patient: PatientProfile | dict,
                       seg_config: SegmentationConfig | dict,
                       orch_config: OrchestrationConfig | dict,
                       audio_bytes: bytes) -> str:
        try:
            mode = SessionMode(mode)
            if isinstance(patient, dict):
                patient = PatientProfile.model_validate(patient)
            if isinstance(seg_config, dict):
                seg_config = SegmentationConfig.model_validate(seg_config)
            if isinstance(orch_config, dict):
                orch_config = OrchestrationConfig.model_validate(orch_config)
        except (ValidationError, ValueError) as exc:
            raise BadConfig(str(exc)) from exc

        clip = read_wav(audio_bytes)  # raises BadAudio / EmptyAudio

        session_id = str(uuid.uuid4())
        session = Session(session_id, mode, patient, seg_config, orch_config)
        session.clip = clip

        self.store.create(session_id, audio_bytes)
        self.store.append_event(session_id, "created", {
            "mode": mode.value,
            "patient": patient.model_dump(mode="json"),
            "seg_config": seg_config.model_dump(mode="json"),
            "orch_config": orch_config.model_dump(mode="json"),
        })
        self._set_lifecycle(session, Lifecycle.QUEUED)
        self._sessions[session_id] = session

        if self.auto_process:
            self._executor.submit(self.process_session, session_id)
        return session_id

    def _get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise NotFound(session_id)
        return session

    def _clip_for(self, session: Session) -> AudioClip:
        if session.clip is None:
            session.clip = read_wav(self.store.read_audio(session.id))
        return session.clip

    def process_session(self, session_id: str) -> None:
        """Background pipeline. Errors land in Failed(reason), never raise."""
        session = self._get(session_id)
        with session.lock:
            if session.lifecycle is not Lifecycle.QUEUED:
                return
            self._set_lifecycle(session, Lifecycle.PROCESSING)
        try:
            self._run_pipeline(session)
        except Exception as exc:  # noqa: BLE001 - lifecycle captures the failure
            with session.lock:
                self._set_lifecycle(session, Lifecycle.FAILED,
                                    f"{type(exc).__name__}: {exc}")

    def _run_pipeline(self, session: Session) -> None:
        clip = self._clip_for(session)

        self._emit(session, "segmenting", 0.05)
        chunks = segment(clip, session.seg_config)

        self._emit(session, "classifying", 0.2)
        session.analyses = classify_all(chunks, self.classifier)

        if session.mode is SessionMode.CLASSIFICATION_ONLY:
            session.classification = aggregate(session.analyses, self.thresholds)
            self._persist_analysis(session)
            with session.lock:
                self._set_lifecycle(session, Lifecycle.RESULTS_READY)
            return

        self._emit(session, "transcribing", 0.4)
        session.analyses = self._enrich(session.analyses, chunks)
        session.classification = aggregate(session.analyses, self.thresholds)
        self._persist_analysis(session)

        self._run_generation(session)

    def _enrich(self, analyses: list[ChunkAnalysis],
                chunks: list) -> list[ChunkAnalysis]:
        """Attach ASR text and phonemes to cached label distributions."""
        enriched = []
        for a, chunk in zip(analyses, chunks):
            enriched.append(a.model_copy(update={
                "transcript": self.transcriber.transcribe(chunk),
                "phonemes": self.phonemizer.phonemize(chunk),
            }))
        return enriched

    def _run_generation(self, session: Session) -> None:
        ctx = PromptContext.build(
            patient=session.patient,
            classification=session.classification,
            chunk_details=session.analyses,
            phoneme_correlation=session.classification.problematic_phonemes or None,
        )
        backend = self._chat_factory(session.id)
        total = 1 + 2 * session.orch_config.rounds

        def on_stage(stage: str, rnd: int) -> None:
            done = {"generating": 0, "critiquing": 1 + 2 * rnd,
                    "refining": 2 + 2 * rnd}[stage]
            self._emit(session, stage, 0.6 + 0.35 * done / total)

        result = run_loop(ctx, session.orch_config, backend, on_stage=on_stage)
        self._persist_plan(session, result, base_round=len(session.history))
        self._emit(session, "exporting", 0.99)
        with session.lock:
            self._set_lifecycle(session, Lifecycle.PENDING_REVIEW)

    def upgrade_session(self, session_id: str) -> None:
        """Carry cached classifications into full therapy generation. Zero
        classifier calls; only ASR/phonemization run as post-processing."""
        session = self._get(session_id)
        with session.lock:
            if (session.lifecycle is not Lifecycle.RESULTS_READY
                    or session.mode is not SessionMode.CLASSIFICATION_ONLY):
                raise InvalidState(
                    "upgrade requires a ResultsReady classification_only session")
            session.mode = SessionMode.FULL
            self.store.append_event(session_id, "mode", {"mode": SessionMode.FULL.value})
            self._set_lifecycle(session, Lifecycle.PROCESSING)
        self._executor.submit(self._run_upgrade, session_id)

    def _run_upgrade(self, session_id: str) -> None:
        session = self._get(session_id)
        try:
            clip = self._clip_for(session)
            chunks = segment(clip, session.seg_config)
            self._emit(session, "transcribing", 0.4)
            session.analyses = self._enrich(session.analyses, chunks)
            session.classification = aggregate(session.analyses, self.thresholds)
            self._persist_analysis(session)
            self._run_generation(session)
        except Exception as exc:  # noqa: BLE001
            with session.lock:
                self._set_lifecycle(session, Lifecycle.FAILED,
                                    f"{type(exc).__name__}: {exc}")

    # -- review -----------------------------------------------------------

    def post_review(self, session_id: str, action: ReviewAction) -> Lifecycle:
        session = self._get(session_id)
        with session.lock:
            if session.lifecycle is not Lifecycle.PENDING_REVIEW:
                raise InvalidAction(
                    f"review actions require PendingReview, session is "
                    f"{session.lifecycle.value}")
            if action.action.value == "approve":
                violations = validate_plan(session.plan) if session.plan else None
                if violations is None or violations:
                    raise InvalidAction("plan does not validate; cannot approve")
            effect = session.review.submit(action)
            self._persist_review(session, session.review.audit_log[-1])
            if effect is Effect.FINALIZE:
                self._set_lifecycle(session, Lifecycle.APPROVED)
            elif effect is Effect.TERMINATE:
                self._set_lifecycle(session, Lifecycle.REJECTED)
            else:
                self._set_lifecycle(session, Lifecycle.REVISING)
        if effect is Effect.SCHEDULE_REVISION:
            self._executor.submit(self._run_revision, session_id, action.feedback)
        return session.lifecycle

    def _run_revision(self, session_id: str, feedback: str) -> None:
        session = self._get(session_id)
        try:
            ctx = PromptContext.build(
                patient=session.patient,
                classification=session.classification,
                chunk_details=session.analyses,
                phoneme_correlation=session.classification.problematic_phonemes or None,
            )
            backend = self._chat_factory(session.id)
            result = apply_human_revision(session.plan, feedback, ctx, backend,
                                          session.orch_config)
            self._persist_plan(session, result, base_round=len(session.history))
        except RefinementFailed:
            # Keep the last valid plan; the clinician can still act on it.
            session.degraded = True
        with session.lock:
            session.review.revision_complete()
            self.store.append_event(session_id, "review_state", {
                "state": session.review.state.model_dump(mode="json")})
            self._set_lifecycle(session, Lifecycle.PENDING_REVIEW)

    # -- reads --------------------------------------------------------------

    def get_status(self, session_id: str) -> dict:
        session = self._get(session_id)
        latest = session.latest_event
        status = {
            "lifecycle": session.lifecycle.value,
            "stage": latest.stage if latest else None,
            "progress": latest.progress if latest else 0.0,
        }
        if session.failure_reason:
            status["reason"] = session.failure_reason
        return status

    def get_progress_events(self, session_id: str) -> list[ProgressEvent]:
        return list(self._get(session_id).progress_events)

    def get_results(self, session_id: str) -> dict:
        session = self._get(session_id)
        if session.classification is None or session.lifecycle in (
                Lifecycle.QUEUED, Lifecycle.PROCESSING, Lifecycle.FAILED):
            raise InvalidState(
                f"results not available in state {session.lifecycle.value}")
        from .export import build_result_document
        return build_result_document(session, self._clip_for(session))

    def get_chunk_audio(self, session_id: str, index: int) -> bytes:
        session = self._get(session_id)
        clip = self._clip_for(session)
        chunks = segment(clip, session.seg_config)
        if index < 0 or index >= len(chunks):
            raise ChunkOutOfRange(f"chunk {index} of {len(chunks)}")
        chunk = chunks[index]
        return write_wav(chunk.samples, chunk.sample_rate_hz)

    def export_html(self, session_id: str) -> str:
        session = self._get(session_id)
        if session.classification is None:
            raise InvalidState("nothing to export yet")
        from .export import render_html
        doc = self.get_results(session_id)
        return render_html(doc, approved=session.lifecycle is Lifecycle.APPROVED)
