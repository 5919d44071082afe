"""Session lifecycle, caching upgrade, persistence, and crash recovery."""

from __future__ import annotations

import time

import pytest

from speechplan.analysis import MockClassifier, MockPhonemizer, MockTranscriber
from speechplan.config import Settings
from speechplan.review import InvalidAction, ReviewAction, ReviewActionType
from speechplan.service import (
    STAGE_ORDER,
    BadConfig,
    ChunkOutOfRange,
    InvalidState,
    Lifecycle,
    NotFound,
    SessionService,
)

from conftest import make_wav


def wait_until(pred, timeout=10.0, interval=0.02):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if pred():
            return True
        time.sleep(interval)
    return False


def modify(feedback="add breathing work"):
    return ReviewAction(action=ReviewActionType.MODIFY, feedback=feedback,
                        clinician_id="clin-1")


def approve():
    return ReviewAction(action=ReviewActionType.APPROVE, clinician_id="clin-1")


def reject():
    return ReviewAction(action=ReviewActionType.REJECT, clinician_id="clin-1")


def submit(service, mode="full", duration=10.0, seg=None, orch=None) -> str:
    return service.create_session(mode, {}, seg or {}, orch or {},
                                  make_wav(duration))


class TestCreateSession:
    def test_session_id_is_uuid4(self, mock_service):
        import uuid

        sid = submit(mock_service)
        assert uuid.UUID(sid).version == 4

    def test_bad_audio_rejected(self, mock_service):
        from speechplan.segmenter import BadAudio

        with pytest.raises(BadAudio):
            mock_service.create_session("full", {}, {}, {}, b"not audio")

    def test_bad_config_rejected(self, mock_service):
        with pytest.raises(BadConfig):
            submit(mock_service, seg={"duration_s": 7})
        with pytest.raises(BadConfig):
            submit(mock_service, mode="turbo")
        with pytest.raises(BadConfig):
            mock_service.create_session("full", {"locale": "xx-XX"}, {}, {},
                                        make_wav(4.0))

    def test_unknown_session_not_found(self, mock_service):
        with pytest.raises(NotFound):
            mock_service.get_status("nope")


class TestFullPipeline:
    def test_runs_to_pending_review(self, mock_service):
        sid = submit(mock_service)
        mock_service.process_session(sid)
        status = mock_service.get_status(sid)
        assert status["lifecycle"] == "PendingReview"

    def test_progress_stages_monotonic(self, mock_service):
        sid = submit(mock_service)
        mock_service.process_session(sid)
        events = mock_service.get_progress_events(sid)
        stages = [e.stage for e in events]
        # analysis stages precede generation; export is last; the
        # critique/refine pair alternates once per round in between
        assert stages[:4] == ["segmenting", "classifying", "transcribing",
                              "generating"]
        assert stages[-1] == "exporting"
        assert stages[4:-1] == ["critiquing", "refining"] * 2
        assert all(s in STAGE_ORDER for s in stages)
        progresses = [e.progress for e in events]
        assert progresses == sorted(progresses)
        assert {e.stage for e in events} >= {
            "segmenting", "classifying", "transcribing",
            "generating", "critiquing", "refining", "exporting"}

    def test_result_document_complete(self, mock_service):
        sid = submit(mock_service)
        mock_service.process_session(sid)
        doc = mock_service.get_results(sid)
        assert doc["sessionId"] == sid
        assert doc["analysis_summary"]["chunk_count"] == 4
        assert doc["analysis_summary"]["duration_s"] == pytest.approx(10.0)
        assert len(doc["chunks"]) == 4
        for i, record in enumerate(doc["chunks"]):
            assert record["index"] == i
            assert record["transcript"]
            assert record["phonemes"]
        assert doc["plan"] is not None
        assert doc["classification"]["primary_type"]
        assert isinstance(doc["critic_texts"], list) and doc["critic_texts"]
        assert len(doc["generation_history"]) == 5  # 1 + 2*2 default rounds
        assert doc["audit_log"] == []

    def test_chunk_time_ranges(self, mock_service):
        sid = submit(mock_service)
        mock_service.process_session(sid)
        doc = mock_service.get_results(sid)
        spans = [(r["start_s"], r["end_s"]) for r in doc["chunks"]]
        assert spans == [(0.0, 4.0), (2.0, 6.0), (4.0, 8.0), (6.0, 10.0)]

    def test_results_unavailable_while_queued(self, mock_service):
        sid = submit(mock_service)
        with pytest.raises(InvalidState):
            mock_service.get_results(sid)

    def test_chunk_audio_roundtrip(self, mock_service):
        from speechplan.segmenter import read_wav

        sid = submit(mock_service)
        mock_service.process_session(sid)
        wav = mock_service.get_chunk_audio(sid, 2)
        clip = read_wav(wav)
        assert clip.duration_s == pytest.approx(4.0)
        with pytest.raises(ChunkOutOfRange):
            mock_service.get_chunk_audio(sid, 4)

    def test_rounds_zero_configuration(self, mock_service):
        sid = submit(mock_service, orch={"rounds": 0})
        mock_service.process_session(sid)
        doc = mock_service.get_results(sid)
        assert len(doc["generation_history"]) == 1


class TestClassificationOnlyAndUpgrade:
    def test_classification_only_ends_results_ready(self, mock_service):
        sid = submit(mock_service, mode="classification_only")
        mock_service.process_session(sid)
        assert mock_service.get_status(sid)["lifecycle"] == "ResultsReady"
        doc = mock_service.get_results(sid)
        assert doc["plan"] is None
        assert doc["chunks"][0]["transcript"] is None

    def test_upgrade_reuses_cached_classifications(self, tmp_path):
        classifier = MockClassifier(seed=0)
        phonemizer = MockPhonemizer(seed=0)
        transcriber = MockTranscriber(seed=0)
        service = SessionService(
            Settings(data_dir=str(tmp_path / "data")),
            classifier=classifier,
            transcriber=transcriber,
            phonemizer=phonemizer,
            auto_process=False,
        )
        sid = submit(service, mode="classification_only")
        service.process_session(sid)
        chunk_count = len(service.get_results(sid)["chunks"])
        assert classifier.call_count == chunk_count
        before = service.get_results(sid)["classification"]

        service.upgrade_session(sid)
        assert wait_until(
            lambda: service.get_status(sid)["lifecycle"] == "PendingReview")
        assert classifier.call_count == chunk_count  # zero new calls
        assert phonemizer.call_count == chunk_count
        assert transcriber.call_count == chunk_count
        doc = service.get_results(sid)
        assert doc["mode"] == "full"
        assert doc["plan"] is not None
        after = doc["classification"]
        for key in ("primary_type", "secondary_type", "severity",
                    "stuttering_pct", "weighted_confidence"):
            assert after[key] == before[key]
        service._executor.shutdown(wait=True)

    def test_upgrade_matches_from_scratch_full_run(self, tmp_path):
        settings_a = Settings(data_dir=str(tmp_path / "a"))
        settings_b = Settings(data_dir=str(tmp_path / "b"))
        svc_a = SessionService(settings_a, auto_process=False)
        svc_b = SessionService(settings_b, auto_process=False)
        wav = make_wav(10.0)

        sid_a = svc_a.create_session("classification_only", {}, {}, {}, wav)
        svc_a.process_session(sid_a)
        svc_a.upgrade_session(sid_a)
        assert wait_until(
            lambda: svc_a.get_status(sid_a)["lifecycle"] == "PendingReview")

        sid_b = svc_b.create_session("full", {}, {}, {}, wav)
        svc_b.process_session(sid_b)

        class_a = svc_a.get_results(sid_a)["classification"]
        class_b = svc_b.get_results(sid_b)["classification"]
        assert class_a == class_b
        svc_a._executor.shutdown(wait=True)
        svc_b._executor.shutdown(wait=True)

    def test_upgrade_requires_results_ready_classification_only(self, mock_service):
        sid = submit(mock_service, mode="full")
        mock_service.process_session(sid)
        with pytest.raises(InvalidState):
            mock_service.upgrade_session(sid)


class TestReviewFlow:
    def pending_session(self, service):
        sid = submit(service)
        service.process_session(sid)
        return sid

    def test_approve_finalizes(self, mock_service):
        sid = self.pending_session(mock_service)
        lifecycle = mock_service.post_review(sid, approve())
        assert lifecycle is Lifecycle.APPROVED
        doc = mock_service.get_results(sid)
        assert len(doc["audit_log"]) == 1

    def test_reject_terminates(self, mock_service):
        sid = self.pending_session(mock_service)
        assert mock_service.post_review(sid, reject()) is Lifecycle.REJECTED
        with pytest.raises(InvalidAction):
            mock_service.post_review(sid, approve())

    def test_modify_revises_then_returns_to_pending(self, mock_service):
        sid = self.pending_session(mock_service)
        plan_before = mock_service.get_results(sid)["plan"]
        assert mock_service.post_review(sid, modify()) is Lifecycle.REVISING
        assert wait_until(
            lambda: mock_service.get_status(sid)["lifecycle"] == "PendingReview")
        doc = mock_service.get_results(sid)
        assert doc["plan"] != plan_before
        assert doc["plan"]["explanation"]["therapeutic_rationale"].startswith(
            "Revised per clinician feedback.")
        roles = [r["role"] for r in doc["generation_history"]]
        assert roles[-1] == "human_revision"
        # a second modify exceeds the default budget
        with pytest.raises(InvalidAction):
            mock_service.post_review(sid, modify("again"))
        assert mock_service.post_review(sid, approve()) is Lifecycle.APPROVED

    def test_review_requires_pending_state(self, mock_service):
        sid = submit(mock_service)
        with pytest.raises(InvalidAction):
            mock_service.post_review(sid, approve())


class TestExport:
    def test_draft_watermark_until_approved(self, mock_service):
        sid = submit(mock_service)
        mock_service.process_session(sid)
        draft = mock_service.export_html(sid)
        assert "DRAFT" in draft
        mock_service.post_review(sid, approve())
        final = mock_service.export_html(sid)
        assert "DRAFT" not in final
        assert "Audit Log" in final
        plan_goal = mock_service.get_results(sid)["plan"]["primary_goal"]["goal"]
        assert plan_goal[:40] in final

    def test_export_contains_chunk_table_and_classification(self, mock_service):
        sid = submit(mock_service)
        mock_service.process_session(sid)
        html = mock_service.export_html(sid)
        assert "Chunk Analysis" in html
        assert "Overall Classification" in html
        assert "Therapy Recommendations" in html


class TestPersistenceAndRecovery:
    def test_terminal_session_reloads_losslessly(self, tmp_path):
        data_dir = str(tmp_path / "data")
        service = SessionService(Settings(data_dir=data_dir), auto_process=False)
        sid = submit(service)
        service.process_session(sid)
        service.post_review(sid, modify())
        assert wait_until(
            lambda: service.get_status(sid)["lifecycle"] == "PendingReview")
        service.post_review(sid, approve())
        doc_before = service.get_results(sid)
        service._executor.shutdown(wait=True)

        reloaded = SessionService(Settings(data_dir=data_dir), auto_process=False)
        assert reloaded.get_status(sid)["lifecycle"] == "Approved"
        doc_after = reloaded.get_results(sid)
        for key in ("classification", "plan", "chunks", "audit_log",
                    "generation_history", "red_flag", "degraded"):
            assert doc_after[key] == doc_before[key], key
        reloaded._executor.shutdown(wait=True)

    def test_inflight_session_fails_on_restart(self, tmp_path):
        data_dir = str(tmp_path / "data")
        service = SessionService(Settings(data_dir=data_dir), auto_process=False)
        sid = submit(service)  # stays Queued: in-flight at "crash" time
        service._executor.shutdown(wait=True)

        reloaded = SessionService(Settings(data_dir=data_dir), auto_process=False)
        status = reloaded.get_status(sid)
        assert status["lifecycle"] == "Failed"
        assert status["reason"] == "interrupted"
        reloaded._executor.shutdown(wait=True)

    def test_mid_processing_crash_marks_failed(self, tmp_path):
        data_dir = str(tmp_path / "data")
        service = SessionService(Settings(data_dir=data_dir), auto_process=False)
        sid = submit(service)
        session = service._get(sid)
        # simulate a crash right after the lifecycle hit Processing
        service._set_lifecycle(session, Lifecycle.PROCESSING)
        service._executor.shutdown(wait=True)

        reloaded = SessionService(Settings(data_dir=data_dir), auto_process=False)
        status = reloaded.get_status(sid)
        assert status["lifecycle"] == "Failed"
        assert status["reason"] == "interrupted"
        reloaded._executor.shutdown(wait=True)

    def test_torn_tail_line_tolerated(self, tmp_path):
        data_dir = str(tmp_path / "data")
        service = SessionService(Settings(data_dir=data_dir), auto_process=False)
        sid = submit(service)
        service.process_session(sid)
        service.post_review(sid, approve())
        service._executor.shutdown(wait=True)

        events_path = service.store.session_dir(sid) / "events.jsonl"
        with events_path.open("a", encoding="utf-8") as fh:
            fh.write('{"type": "lifecycle", "lifecy')  # torn write

        reloaded = SessionService(Settings(data_dir=data_dir), auto_process=False)
        assert reloaded.get_status(sid)["lifecycle"] == "Approved"
        reloaded._executor.shutdown(wait=True)
