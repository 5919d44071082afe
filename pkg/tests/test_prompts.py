"""Prompt rendering: fixed prose intact, placeholders filled, optional blocks."""

from __future__ import annotations

import pytest

from speechplan.models import (
    LABEL_ORDER,
    OverallClassification,
    PatientProfile,
    Severity,
    StutterLabel,
)
from speechplan.prompts import (
    MissingContext,
    PromptContext,
    _substitute,
    locale_description,
    plan_schema_str,
    render_critic_prompt,
    render_human_revision_prompt,
    render_refinement_prompt,
    render_therapy_prompt,
)

from conftest import make_context, valid_plan
from test_analysis import analysis


class TestSubstitution:
    def test_simple(self):
        assert _substitute("a {x} b", {"x": "1"}) == "a 1 b"

    def test_leftover_placeholder_raises(self):
        with pytest.raises(MissingContext) as exc:
            _substitute("a {x} {y}", {"x": "1"})
        assert exc.value.placeholder == "y"

    def test_substituted_json_braces_not_mistaken_for_placeholders(self):
        out = _substitute("schema: {schema_str}", {"schema_str": '{"a": "b"}'})
        assert '"a": "b"' in out

    def test_locale_descriptions(self):
        assert locale_description("en-US") == "English (United States)"
        assert locale_description("pt-PT") == "Portuguese (Portugal)"
        assert locale_description("zz-ZZ") == "zz-ZZ"


class TestTherapyPrompt:
    def test_system_prompt_fixed_prose(self):
        system, _ = render_therapy_prompt(make_context())
        for needle in (
            "LICENSED, expert speech-language pathologist",
            "URGENT CLINICAL NOTE: Patient profile indicates serious",
            "clinicalReasoning",
            "Output ONLY valid JSON",
            "English (United States)",
        ):
            assert needle in system
        assert plan_schema_str() in system
        assert "{" not in system.replace(plan_schema_str(), "")

    def test_human_prompt_patient_fields(self):
        ctx = make_context()
        _, human = render_therapy_prompt(ctx)
        assert "PATIENT INFO" in human
        assert "- Type: Prolongation" in human
        assert "adult, 34" in human
        assert "en-US" in human

    def test_optional_blocks_omitted_without_chunk_details(self):
        _, human = render_therapy_prompt(make_context())
        assert "ACOUSTIC PROFILE" not in human
        assert "PER-CHUNK ANALYSIS" not in human
        assert "PHONEME-DISFLUENCY CORRELATION" not in human
        assert "Transcription: N/A" in human
        assert "Phonemes: N/A" in human

    def test_optional_blocks_present_with_data(self):
        chunk = analysis(StutterLabel.BLOCK, 0.7, index=0,
                         phonemes=["s", "t"]).model_copy(
            update={"transcript": "she could buy"})
        ctx = make_context(chunk_details=[chunk],
                           phoneme_correlation=[("s", 2.5)])
        _, human = render_therapy_prompt(ctx)
        assert "ACOUSTIC PROFILE:" in human
        assert "PER-CHUNK ANALYSIS:" in human
        assert "chunk 0: Block (confidence 0.70)" in human
        assert 'text="she could buy"' in human
        assert "PHONEME-DISFLUENCY CORRELATION:" in human
        assert "/s/ (ratio 2.50)" in human
        assert "she could buy" in human

    def test_locale_parameterizes_system_prompt(self):
        ctx = make_context(patient=PatientProfile(locale="de-DE"))
        system, human = render_therapy_prompt(ctx)
        assert "German (Germany)" in system
        assert "de-DE" in human

    def test_empty_patient_profile_renders_not_specified(self):
        ctx = make_context(patient=PatientProfile())
        _, human = render_therapy_prompt(ctx)
        assert "Not specified" in human


class TestCriticPrompt:
    def test_contains_plan_and_all_six_domains(self):
        ctx = make_context()
        system, human = render_critic_prompt(valid_plan(), ctx)
        assert "THERAPY PLAN TO REVIEW:" in human
        assert '"stuttering_type_definition"' in human
        for domain in (
            "Clinical Soundness",
            "Safety Concerns",
            "Evidence Strength",
            "Improvements Needed",
            "Structure and Clarity",
            "Explainability and Reasoning Transparency",
        ):
            assert domain in human
        assert "Stuttering Percentage: 40%" in human
        assert "critic" in system.lower() or "review" in system.lower()

    def test_type_distribution_included(self):
        chunk_details = [analysis(StutterLabel.BLOCK, 0.7, index=0),
                         analysis(StutterLabel.FLUENT, 0.8, index=1)]
        ctx = make_context(chunk_details=chunk_details)
        _, human = render_critic_prompt(valid_plan(), ctx)
        assert "Block: 1" in human
        assert "Fluent: 1" in human


class TestRefinementPrompt:
    def test_contains_feedback_and_previous_plan(self):
        ctx = make_context()
        _, human = render_refinement_prompt(valid_plan(), "needs more pacing work", ctx)
        assert "needs more pacing work" in human
        assert '"primary_goal"' in human

    def test_blank_feedback_rejected(self):
        with pytest.raises(MissingContext):
            render_refinement_prompt(valid_plan(), "   ", make_context())


class TestHumanRevisionPrompt:
    def classification(self):
        return OverallClassification(
            primary_type=StutterLabel.PROLONGATION,
            weighted_confidence=0.8,
            severity=Severity.MODERATE,
            stuttering_pct=20.0,
            problematic_phonemes=[("s", 3.0)],
        )

    def test_contains_feedback_and_modify_directive(self):
        text = render_human_revision_prompt(
            valid_plan(), "emphasise respiratory control", self.classification())
        assert "CLINICIAN FEEDBACK: emphasise respiratory control" in text
        assert "Do NOT create a new plan from scratch" in text
        assert "Stuttering Type: Prolongation" in text
        assert "/s/ (ratio 3.00)" in text

    def test_blank_feedback_rejected(self):
        with pytest.raises(MissingContext):
            render_human_revision_prompt(valid_plan(), "", self.classification())


class TestNoLeftoverPlaceholders:
    def test_all_rendered_prompts_fully_substituted(self):
        import re

        ctx = make_context(
            chunk_details=[analysis(StutterLabel.BLOCK, 0.7, index=0,
                                    phonemes=["s"])],
            phoneme_correlation=[("s", 2.0)],
        )
        pattern = re.compile(r"\{[a-z_]+\}")
        texts = []
        texts.extend(render_therapy_prompt(ctx))
        texts.extend(render_critic_prompt(valid_plan(), ctx))
        texts.extend(render_refinement_prompt(valid_plan(), "feedback", ctx))
        texts.append(render_human_revision_prompt(
            valid_plan(), "feedback", ctx.classification))
        for text in texts:
            assert not pattern.search(text), text[:200]
