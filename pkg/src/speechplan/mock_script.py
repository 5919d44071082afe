"""Default response table for the scripted chat mock.

Used when no LLM endpoint is configured so the full pipeline runs offline.
The plan bodies are minimal but valid against the plan schema.
"""

from __future__ import annotations

import json


def sample_plan_dict(note: str = "") -> dict:
    """A schema-valid therapy plan; ``note`` lets rounds differ visibly."""
    rationale = (
        "Stuttering Modification precedes Fluency Shaping so tension and "
        "reactivity are addressed before articulatory retraining. "
        "IMPORTANT LIMITATION: This AI-generated plan is a decision support "
        "tool requiring review by a qualified SLP. It does not substitute "
        "for professional judgment."
    )
    if note:
        rationale = f"{note} {rationale}"
    return {
        "explanation": {
            "stuttering_type_definition": (
                "Prolongation involves involuntary stretching of a sound while "
                "articulatory movement is temporarily suspended."
            ),
            "patient_characteristics": (
                "Prolongations concentrated on fricatives with articulatory tension."
            ),
            "therapeutic_rationale": rationale,
        },
        "primary_goal": {
            "goal": "Increase ease of speech by reducing physical tension during disfluencies.",
            "target": "Self-reported tension below 3 on a 10-point scale during disfluencies.",
            "baseline": "Uncontrolled prolongations on 10-15% of syllables with tension.",
            "rationale": "Effectiveness of communication matters more than fluency counts.",
        },
        "steps": [
            {
                "name": "Foundation: Identification and Proprioception",
                "week_range": "Weeks 1-2",
                "objective": "Identify tension sites and contrast tense versus loose production.",
                "strategies": [
                    {
                        "name": "Proprioceptive Awareness",
                        "description": "Map articulatory tension during prolongations.",
                        "instructions": (
                            "DRILL: prolong /s/ in 'sun', scan for tension; contrast "
                            "100% and 10% articulatory pressure. HOME: 5 min daily, "
                            "rate ease 0-9."
                        ),
                        "clinical_reasoning": {
                            "observation": "Prolongations on fricatives with tongue tension.",
                            "clinicalRationale": "Awareness precedes modification of tension.",
                            "expectedOutcome": "Reliable tension identification within 2 weeks.",
                            "evidenceBase": "ASHA Practice Portal: Fluency Disorders",
                        },
                    }
                ],
            },
            {
                "name": "Fluency Shaping: Light Articulatory Contacts",
                "week_range": "Weeks 3-5",
                "objective": "Reduce articulatory pressure on fricatives.",
                "strategies": [
                    {
                        "name": "Light Articulatory Contact",
                        "description": "Touch articulators with minimal pressure.",
                        "instructions": (
                            "DRILL: 'feather' /s/ and /sh/ words; negative practice "
                            "contrasting hard and light contact. HOME: 10 min reading "
                            "with highlighted fricatives."
                        ),
                        "clinical_reasoning": {
                            "observation": "Locking occurs when the tongue presses too hard.",
                            "clinicalRationale": "Lower contact pressure prevents the lock.",
                            "expectedOutcome": "Prolongation duration under 1 s within 3 weeks.",
                            "evidenceBase": "Guitar & McCauley (2010)",
                        },
                    }
                ],
            },
        ],
    }


def sample_critic_text() -> str:
    domains = [
        "Clinical Soundness",
        "Safety Concerns",
        "Evidence Strength",
        "Improvements Needed",
        "Structure and Clarity",
        "Explainability and Reasoning Transparency",
    ]
    blocks = []
    for d in domains:
        blocks.append(
            f"- {d}:\n"
            f"  - Observation: plan reviewed for {d.lower()}.\n"
            f"  - Strengths: coherent and person-centered.\n"
            f"  - Concerns: none blocking.\n"
            f"  - Recommendations: keep progression gradual."
        )
    return "\n".join(blocks)


def default_script() -> dict:
    plan0 = json.dumps(sample_plan_dict(), indent=2)
    refined = json.dumps(sample_plan_dict("Refined per critic feedback."), indent=2)
    revised = json.dumps(sample_plan_dict("Revised per clinician feedback."), indent=2)
    return {
        ("therapy", 0): plan0,
        ("critic", 0): sample_critic_text(),
        ("refine", 0): refined,
        ("human_revision", 0): revised,
    }
