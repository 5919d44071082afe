"""Shared fixtures: synthetic WAV clips, scripted chat backends, plan loading."""

from __future__ import annotations

import io
import json
import math
import struct
import wave
from pathlib import Path

import pytest

from speechplan.analysis import MockClassifier, MockPhonemizer, MockTranscriber
from speechplan.config import Settings
from speechplan.llm import MockChatBackend
from speechplan.mock_script import default_script
from speechplan.models import (
    OverallClassification,
    PatientProfile,
    Severity,
    StutterLabel,
    TherapyPlan,
)
from speechplan.prompts import PromptContext
from speechplan.service import SessionService

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "plans"


def make_wav(duration_s: float, rate: int = 16000, freq: float = 220.0) -> bytes:
    """Synthesize a mono 16-bit sine-wave WAV of the given duration."""
    n = int(round(duration_s * rate))
    frames = struct.pack(
        "<" + "h" * n,
        *[int(12000 * math.sin(2 * math.pi * freq * i / rate)) for i in range(n)],
    )
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(frames)
    return buf.getvalue()


def load_plan_fixture(name: str) -> dict:
    return json.loads((FIXTURE_DIR / f"{name}.json").read_text("utf-8"))


def all_plan_fixture_names() -> list[str]:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.json"))


def make_context(**overrides) -> PromptContext:
    classification = overrides.pop("classification", None) or OverallClassification(
        primary_type=StutterLabel.PROLONGATION,
        secondary_type=StutterLabel.BLOCK,
        weighted_confidence=0.72,
        severity=Severity.MODERATE,
        stuttering_pct=40.0,
    )
    patient = overrides.pop("patient", None) or PatientProfile(
        demographics="adult, 34",
        clinical_history="prolongations on fricatives since childhood",
    )
    return PromptContext.build(patient, classification, **overrides)


@pytest.fixture
def scripted_backend() -> MockChatBackend:
    return MockChatBackend(default_script())


@pytest.fixture
def mock_service(tmp_path):
    """A fully mock-backed service with auto-processing disabled for
    deterministic, synchronous tests."""
    service = SessionService(
        Settings(data_dir=str(tmp_path / "data")),
        auto_process=False,
    )
    yield service
    service._executor.shutdown(wait=True)


class CountingClassifier(MockClassifier):
    pass


class CountingPhonemizer(MockPhonemizer):
    pass


class CountingTranscriber(MockTranscriber):
    pass


def valid_plan() -> TherapyPlan:
    return TherapyPlan.model_validate(load_plan_fixture("prolongation_1"))
