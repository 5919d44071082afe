"""Shared domain types: disfluency labels, analysis records, the therapy-plan
schema, plan validation, and red-flag detection.

All models are immutable pydantic values. Canonical JSON serialization uses
the field names declared here (enum values in PascalCase); the four
clinical-reasoning fields keep their camelCase wire names via aliases.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from enum import Enum
from typing import ClassVar, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

RED_FLAG_MARKER = "URGENT CLINICAL NOTE"

#: Locale tags accepted for patient profiles, with human-readable descriptions
#: used when rendering prompts. Unknown tags fall back to the raw tag string.
LOCALE_DESCRIPTIONS = {
    "en-US": "English (United States)",
    "en-GB": "English (United Kingdom)",
    "fr-FR": "French (France)",
    "pt-PT": "Portuguese (Portugal)",
    "de-DE": "German (Germany)",
}


class StutterLabel(str, Enum):
    """The six per-chunk classification labels. Fluent is the only label that
    counts as non-disfluent when aggregating."""

    PROLONGATION = "Prolongation"
    BLOCK = "Block"
    SOUND_REPETITION = "SoundRepetition"
    WORD_REPETITION = "WordRepetition"
    INTERJECTION = "Interjection"
    FLUENT = "Fluent"


#: Fixed order used for deterministic tie-breaking.
LABEL_ORDER = list(StutterLabel)


class Severity(str, Enum):
    MILD = "mild"
    MODERATE = "moderate"
    SEVERE = "severe"


ALLOWED_DURATIONS_S = (3, 4, 5)
ALLOWED_OVERLAPS_PCT = (0, 25, 50, 75)


class SegmentationConfig(BaseModel):
    """Windowing parameters. Only the UI-exposed combinations are valid."""

    model_config = ConfigDict(frozen=True)

    duration_s: int = 4
    overlap_pct: int = 50

    @field_validator("duration_s")
    @classmethod
    def _check_duration(cls, v: int) -> int:
        if v not in ALLOWED_DURATIONS_S:
            raise ValueError(f"duration_s must be one of {ALLOWED_DURATIONS_S}, got {v}")
        return v

    @field_validator("overlap_pct")
    @classmethod
    def _check_overlap(cls, v: int) -> int:
        if v not in ALLOWED_OVERLAPS_PCT:
            raise ValueError(f"overlap_pct must be one of {ALLOWED_OVERLAPS_PCT}, got {v}")
        return v

    @property
    def hop_s(self) -> float:
        return self.duration_s * (1 - self.overlap_pct / 100)


class AudioClip(BaseModel):
    """Mono 16-bit PCM audio. ``samples`` holds the raw little-endian frames."""

    model_config = ConfigDict(frozen=True)

    samples: bytes
    sample_rate_hz: int = Field(gt=0)
    channel_count: int = 1

    @field_validator("channel_count")
    @classmethod
    def _mono_only(cls, v: int) -> int:
        if v != 1:
            raise ValueError("only mono audio is supported")
        return v

    @property
    def sample_count(self) -> int:
        return len(self.samples) // 2

    @property
    def duration_s(self) -> float:
        return self.sample_count / self.sample_rate_hz


class Chunk(BaseModel):
    """One fixed-length window of a clip. ``padded`` marks digital-silence
    fill on the short-clip path."""

    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=0)
    start_s: float
    end_s: float
    samples: bytes
    sample_rate_hz: int
    padded: bool = False

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


class ChunkAnalysis(BaseModel):
    """Label distribution (plus optional transcript/phonemes) for one chunk."""

    model_config = ConfigDict(frozen=True)

    chunk_index: int
    label_probs: dict[StutterLabel, float]
    top_label: StutterLabel
    confidence: float
    duration_s: float = 1.0
    transcript: Optional[str] = None
    phonemes: Optional[list[str]] = None

    @model_validator(mode="after")
    def _check_distribution(self) -> "ChunkAnalysis":
        if set(self.label_probs) != set(StutterLabel):
            raise ValueError("label_probs must contain all six labels")
        total = sum(self.label_probs.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"label_probs must sum to 1, got {total}")
        best = max(self.label_probs.values())
        if abs(self.confidence - best) > 1e-9:
            raise ValueError("confidence must equal the max label probability")
        expected = top_label_of(self.label_probs)
        if self.top_label is not expected:
            raise ValueError(f"top_label must be {expected} (fixed-order tie break)")
        return self


def top_label_of(label_probs: dict[StutterLabel, float]) -> StutterLabel:
    """Argmax with ties broken by the fixed enum order."""
    best = max(label_probs.values())
    for label in LABEL_ORDER:
        if label_probs.get(label) == best:
            return label
    raise ValueError("empty distribution")


class OverallClassification(BaseModel):
    model_config = ConfigDict(frozen=True)

    primary_type: StutterLabel
    secondary_type: Optional[StutterLabel] = None
    weighted_confidence: float = Field(ge=0.0, le=1.0)
    severity: Severity
    stuttering_pct: float = Field(ge=0.0, le=100.0)
    problematic_phonemes: list[tuple[str, float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _distinct_secondary(self) -> "OverallClassification":
        if self.secondary_type is not None and self.secondary_type == self.primary_type:
            raise ValueError("secondary_type must differ from primary_type")
        return self


class PatientProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    demographics: str = ""
    clinical_history: str = ""
    therapy_background: str = ""
    goals: str = ""
    locale: str = "en-US"

    @field_validator("locale")
    @classmethod
    def _known_locale(cls, v: str) -> str:
        if v not in LOCALE_DESCRIPTIONS:
            raise ValueError(f"locale {v!r} is not in the configured allow-list")
        return v


# ---------------------------------------------------------------------------
# Therapy plan schema
# ---------------------------------------------------------------------------

class ClinicalReasoning(BaseModel):
    """Observation -> rationale -> outcome -> evidence chain attached to every
    strategy. Wire names are camelCase."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    observation: Optional[str] = None
    clinical_rationale: Optional[str] = Field(default=None, alias="clinicalRationale")
    expected_outcome: Optional[str] = Field(default=None, alias="expectedOutcome")
    evidence_base: Optional[str] = Field(default=None, alias="evidenceBase")


class Strategy(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: Optional[str] = None
    description: Optional[str] = None
    instructions: Optional[str] = None
    clinical_reasoning: Optional[ClinicalReasoning] = None


class PlanStep(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: Optional[str] = None
    week_range: Optional[str] = None
    objective: Optional[str] = None
    strategies: list[Strategy] = Field(default_factory=list)


class PlanExplanation(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    stuttering_type_definition: Optional[str] = None
    patient_characteristics: Optional[str] = None
    therapeutic_rationale: Optional[str] = None


class PrimaryGoal(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    goal: Optional[str] = None
    target: Optional[str] = None
    baseline: Optional[str] = None
    rationale: Optional[str] = None


class TherapyPlan(BaseModel):
    """The structured plan. Fields default to None so that a structurally
    parsed but incomplete plan can still be inspected; ``validate_plan``
    reports the defects."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    explanation: Optional[PlanExplanation] = None
    primary_goal: Optional[PrimaryGoal] = None
    steps: list[PlanStep] = Field(default_factory=list)

    @property
    def urgent_flag(self) -> bool:
        """True iff the rendered plan text carries the red-flag marker."""
        return detect_red_flag(self.to_canonical_json())

    def to_canonical_dict(self) -> dict:
        data = self.model_dump(by_alias=True, exclude={"urgent_flag"})
        data["urgent_flag"] = self.urgent_flag
        return data

    def to_canonical_json(self) -> str:
        return canonical_json(
            self.model_dump(by_alias=True, exclude_none=False)
        )


def canonical_json(data) -> str:
    """Canonical UTF-8 JSON: sorted keys, no insignificant whitespace drift."""
    return json.dumps(data, ensure_ascii=False, sort_keys=True, indent=2)


class CriticReview(BaseModel):
    """Structured form of a critic response: exactly the six review domains."""

    model_config = ConfigDict(frozen=True)

    domains: dict[str, dict[str, str]]

    DOMAIN_KEYS: ClassVar[tuple[str, ...]] = (
        "ClinicalSoundness",
        "SafetyConcerns",
        "EvidenceStrength",
        "ImprovementsNeeded",
        "StructureAndClarity",
        "ExplainabilityTransparency",
    )

    @field_validator("domains")
    @classmethod
    def _exactly_six(cls, v: dict) -> dict:
        if set(v) != set(cls.DOMAIN_KEYS):
            raise ValueError("all six review domains must be present exactly once")
        return v


class GenerationRole(str, Enum):
    THERAPY_INITIAL = "therapy_initial"
    CRITIC = "critic"
    REFINE = "refine"
    HUMAN_REVISION = "human_revision"


class GenerationRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    round: int = Field(ge=0)
    role: GenerationRole
    prompt_system: str
    prompt_human: str
    raw_output: str
    parsed_ok: bool


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

class ViolationCode(str, Enum):
    MISSING_FIELD = "missing_field"
    EMPTY_FIELD = "empty_field"
    NO_STEPS = "no_steps"
    DUPLICATE_DOMAIN = "duplicate_domain"


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: str
    code: ViolationCode

    def __str__(self) -> str:  # pragma: no cover - debugging aid
        return f"{self.code.value} at {self.path}"


def _check_text(value: Optional[str], path: str, out: list[Violation]) -> None:
    if value is None:
        out.append(Violation(path=path, code=ViolationCode.MISSING_FIELD))
    elif not value.strip():
        out.append(Violation(path=path, code=ViolationCode.EMPTY_FIELD))


def validate_plan(plan: TherapyPlan) -> list[Violation]:
    """Exhaustively check the plan's invariants.

    Returns an empty list iff the plan is valid. No short-circuiting:
    the critic/refinement loop needs to see every defect at once.
    """
    out: list[Violation] = []

    if plan.explanation is None:
        out.append(Violation(path="explanation", code=ViolationCode.MISSING_FIELD))
    else:
        _check_text(plan.explanation.stuttering_type_definition,
                    "explanation.stuttering_type_definition", out)
        _check_text(plan.explanation.patient_characteristics,
                    "explanation.patient_characteristics", out)
        _check_text(plan.explanation.therapeutic_rationale,
                    "explanation.therapeutic_rationale", out)

    if plan.primary_goal is None:
        out.append(Violation(path="primary_goal", code=ViolationCode.MISSING_FIELD))
    else:
        for field in ("goal", "target", "baseline", "rationale"):
            _check_text(getattr(plan.primary_goal, field), f"primary_goal.{field}", out)

    if not plan.steps:
        out.append(Violation(path="steps", code=ViolationCode.NO_STEPS))

    for i, step in enumerate(plan.steps):
        prefix = f"steps[{i}]"
        _check_text(step.name, f"{prefix}.name", out)
        _check_text(step.week_range, f"{prefix}.week_range", out)
        _check_text(step.objective, f"{prefix}.objective", out)
        if not step.strategies:
            out.append(Violation(path=f"{prefix}.strategies", code=ViolationCode.NO_STEPS))
        for j, strat in enumerate(step.strategies):
            spath = f"{prefix}.strategies[{j}]"
            _check_text(strat.name, f"{spath}.name", out)
            _check_text(strat.description, f"{spath}.description", out)
            _check_text(strat.instructions, f"{spath}.instructions", out)
            if strat.clinical_reasoning is None:
                out.append(Violation(path=f"{spath}.clinical_reasoning",
                                     code=ViolationCode.MISSING_FIELD))
            else:
                cr = strat.clinical_reasoning
                _check_text(cr.observation, f"{spath}.clinical_reasoning.observation", out)
                _check_text(cr.clinical_rationale,
                            f"{spath}.clinical_reasoning.clinicalRationale", out)
                _check_text(cr.expected_outcome,
                            f"{spath}.clinical_reasoning.expectedOutcome", out)
                _check_text(cr.evidence_base,
                            f"{spath}.clinical_reasoning.evidenceBase", out)

    return out


LIMITATION_SENTENCE = "IMPORTANT LIMITATION"


def plan_warnings(plan: TherapyPlan) -> list[str]:
    """Non-blocking advisories. The limitation sentence is mandated by the
    therapy prompt but rendered plans do not always carry it, so its absence
    is reported as a warning rather than a validation error."""
    warnings: list[str] = []
    rationale = plan.explanation.therapeutic_rationale if plan.explanation else None
    if rationale and LIMITATION_SENTENCE not in rationale:
        warnings.append(
            "explanation.therapeutic_rationale lacks the IMPORTANT LIMITATION notice"
        )
    return warnings


def detect_red_flag(plan_text: str) -> bool:
    """Exact, case-sensitive marker match, independent of locale."""
    return RED_FLAG_MARKER in plan_text


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
