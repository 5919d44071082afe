"""Rendering of the four agent prompt templates.

Templates live as UTF-8 text assets under ``templates/`` so the fixed prose
is auditable; substitution uses the single-brace tokens appearing in the
template files. Optional data blocks (acoustic profile, per-chunk analysis,
phoneme correlation) are omitted wholly when the data is absent.
"""

from __future__ import annotations

import json
import re
from importlib import resources
from typing import Optional

from pydantic import BaseModel, ConfigDict

from .models import (
    LOCALE_DESCRIPTIONS,
    ChunkAnalysis,
    OverallClassification,
    PatientProfile,
    TherapyPlan,
    canonical_json,
)


class MissingContext(ValueError):
    def __init__(self, placeholder: str):
        self.placeholder = placeholder
        super().__init__(f"unfilled placeholder: {placeholder}")


#: Canonical therapy-plan schema, substituted into the system prompt as
#: formatted JSON. Keys mirror the wire format exactly.
PLAN_SCHEMA: dict = {
    "explanation": {
        "stuttering_type_definition": "string",
        "patient_characteristics": "string",
        "therapeutic_rationale": "string",
    },
    "primary_goal": {
        "goal": "string",
        "target": "string",
        "baseline": "string",
        "rationale": "string",
    },
    "steps": [
        {
            "name": "string",
            "week_range": "string",
            "objective": "string",
            "strategies": [
                {
                    "name": "string",
                    "description": "string",
                    "instructions": "string",
                    "clinical_reasoning": {
                        "observation": "string",
                        "clinicalRationale": "string",
                        "expectedOutcome": "string",
                        "evidenceBase": "string",
                    },
                }
            ],
        }
    ],
}


def plan_schema_str() -> str:
    return json.dumps(PLAN_SCHEMA, indent=2)


def load_template(name: str) -> str:
    return (resources.files("speechplan") / "templates" / f"{name}.txt").read_text("utf-8")


_PLACEHOLDER_RE = re.compile(r"\{[A-Za-z_][A-Za-z0-9_]*\}")


def _substitute(template: str, values: dict[str, str]) -> str:
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    leftover = _PLACEHOLDER_RE.search(out)
    if leftover:
        raise MissingContext(leftover.group(0).strip("{}"))
    return out


def locale_description(locale: str) -> str:
    return LOCALE_DESCRIPTIONS.get(locale, locale)


class PromptContext(BaseModel):
    model_config = ConfigDict(frozen=True)

    patient: PatientProfile
    classification: OverallClassification
    chunk_details: Optional[list[ChunkAnalysis]] = None
    phoneme_correlation: Optional[list[tuple[str, float]]] = None
    locale_desc: str = ""
    schema_str: str = ""

    @classmethod
    def build(
        cls,
        patient: PatientProfile,
        classification: OverallClassification,
        chunk_details: Optional[list[ChunkAnalysis]] = None,
        phoneme_correlation: Optional[list[tuple[str, float]]] = None,
    ) -> "PromptContext":
        return cls(
            patient=patient,
            classification=classification,
            chunk_details=chunk_details,
            phoneme_correlation=phoneme_correlation,
            locale_desc=locale_description(patient.locale),
            schema_str=plan_schema_str(),
        )


def _require(value: str, placeholder: str) -> str:
    if not value or not value.strip():
        raise MissingContext(placeholder)
    return value


def _patient_characteristics(patient: PatientProfile) -> str:
    parts = [
        p for p in (
            patient.demographics,
            patient.clinical_history,
            patient.therapy_background,
            patient.goals,
        ) if p.strip()
    ]
    return "; ".join(parts) if parts else "Not specified"


def _acoustic_profile_text(ctx: PromptContext) -> str:
    c = ctx.classification
    dist = _type_distribution(ctx)
    lines = [
        f"Primary type: {c.primary_type.value}",
        f"Secondary type: {c.secondary_type.value if c.secondary_type else 'none'}",
        f"Severity: {c.severity.value}",
        f"Stuttering percentage: {_fmt_pct(c.stuttering_pct)}%",
        f"Weighted confidence: {c.weighted_confidence:.3f}",
        f"Chunk type distribution: {dist}",
    ]
    return "\n".join(lines)


def _fmt_pct(pct: float) -> str:
    return f"{pct:g}"


def _type_distribution(ctx: PromptContext) -> str:
    if not ctx.chunk_details:
        return "n/a"
    counts: dict[str, int] = {}
    for a in ctx.chunk_details:
        counts[a.top_label.value] = counts.get(a.top_label.value, 0) + 1
    return ", ".join(f"{k}: {v}" for k, v in sorted(counts.items()))


def _per_chunk_text(chunks: list[ChunkAnalysis]) -> str:
    lines = []
    for a in chunks:
        line = f"chunk {a.chunk_index}: {a.top_label.value} (confidence {a.confidence:.2f})"
        if a.transcript:
            line += f' text="{a.transcript}"'
        if a.phonemes:
            line += f" phonemes=/{' '.join(a.phonemes)}/"
        lines.append(line)
    return "\n".join(lines)


def _correlation_text(pairs: list[tuple[str, float]]) -> str:
    return ", ".join(f"/{p}/ (ratio {r:.2f})" for p, r in pairs)


def render_therapy_prompt(ctx: PromptContext) -> tuple[str, str]:
    """Render the plan-generation prompt pair (system, human)."""
    system = _substitute(load_template("therapy_system"), {
        "language_desc": _require(ctx.locale_desc, "language_desc"),
        "schema_str": _require(ctx.schema_str, "schema_str"),
    })

    transcript = " ".join(
        a.transcript for a in (ctx.chunk_details or []) if a.transcript
    ) or "N/A"
    phoneme_syms = sorted({
        p for a in (ctx.chunk_details or []) if a.phonemes for p in a.phonemes
    })
    phonemes = " ".join(phoneme_syms) or "N/A"

    acoustic = (
        "\n\nACOUSTIC PROFILE:\n" + _acoustic_profile_text(ctx) + "\n"
        if ctx.chunk_details else ""
    )
    per_chunk = (
        "\nPER-CHUNK ANALYSIS:\n" + _per_chunk_text(ctx.chunk_details) + "\n"
        if ctx.chunk_details else ""
    )
    correlation = (
        "\nPHONEME-DISFLUENCY CORRELATION:\n" + _correlation_text(ctx.phoneme_correlation) + "\n"
        if ctx.phoneme_correlation else ""
    )

    human = _substitute(load_template("therapy_human"), {
        "stuttering_type": ctx.classification.primary_type.value,
        "transcription": transcript,
        "phonemes": phonemes,
        "characteristics": _patient_characteristics(ctx.patient),
        "locale": ctx.patient.locale,
        "acoustic_profile_block": acoustic,
        "per_chunk_analysis_block": per_chunk,
        "phoneme_correlation_block": correlation,
    })
    return system, human


def render_critic_prompt(plan: TherapyPlan, ctx: PromptContext) -> tuple[str, str]:
    system = _substitute(load_template("critic_system"), {
        "language_desc": _require(ctx.locale_desc, "language_desc"),
    })
    summary = _correlation_text(ctx.phoneme_correlation or []) or "n/a"
    human = _substitute(load_template("critic_human"), {
        "therapy_plan_json": canonical_json(plan.model_dump(by_alias=True)),
        "primary_type": ctx.classification.primary_type.value,
        "type_distribution": _type_distribution(ctx),
        "stuttering_percentage": _fmt_pct(ctx.classification.stuttering_pct),
        "phoneme_correlation_summary": summary,
    })
    return system, human


def render_refinement_prompt(
    plan: TherapyPlan, critic_feedback: str, ctx: PromptContext
) -> tuple[str, str]:
    system = _substitute(load_template("refine_system"), {
        "language_desc": _require(ctx.locale_desc, "language_desc"),
    })
    acoustic = (
        "- ACOUSTIC PROFILE: " + _acoustic_profile_text(ctx).replace("\n", "; ") + "\n"
        if ctx.chunk_details else ""
    )
    correlation = (
        "- PHONEME-DISFLUENCY CORRELATION: " + _correlation_text(ctx.phoneme_correlation) + "\n"
        if ctx.phoneme_correlation else ""
    )
    human = _substitute(load_template("refine_human"), {
        "patient_info": _patient_characteristics(ctx.patient),
        "acoustic_profile_block": acoustic,
        "phoneme_correlation_block": correlation,
        "previous_plan_json": canonical_json(plan.model_dump(by_alias=True)),
        "critic_feedback": _require(critic_feedback, "critic_feedback"),
    })
    return system, human


def render_human_revision_prompt(
    plan: TherapyPlan,
    clinician_feedback: str,
    classification: OverallClassification,
) -> str:
    phonemes = _correlation_text(classification.problematic_phonemes) or "n/a"
    return _substitute(load_template("human_revision"), {
        "human_feedback": _require(clinician_feedback, "human_feedback"),
        "current_plan_json": canonical_json(plan.model_dump(by_alias=True)),
        "primary_type": classification.primary_type.value,
        "phonemes": phonemes,
    })
