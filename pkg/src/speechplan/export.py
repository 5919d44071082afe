"""Result-document assembly and standalone HTML export."""

from __future__ import annotations

import html
from collections import Counter

from .models import AudioClip, plan_warnings
from .segmenter import plan_windows


def build_result_document(session, clip: AudioClip) -> dict:
    """The full JSON document served by GET /results: analysis summary,
    classification, per-chunk records, plan, generation history, audit log."""
    plan = session.plan
    windows = plan_windows(clip.duration_s, session.seg_config).windows

    chunk_records = []
    for a in session.analyses:
        start_s, end_s = windows[a.chunk_index]
        chunk_records.append({
            "index": a.chunk_index,
            "start_s": start_s,
            "end_s": end_s,
            "type": a.top_label.value,
            "confidence": a.confidence,
            "transcript": a.transcript,
            "phonemes": a.phonemes,
            "label_probs": {k.value: v for k, v in a.label_probs.items()},
        })

    type_distribution = dict(Counter(r["type"] for r in chunk_records))

    doc = {
        "sessionId": session.id,
        "mode": session.mode.value,
        "lifecycle": session.lifecycle.value,
        "createdAt": session.created_at.isoformat(),
        "analysis_summary": {
            "duration_s": clip.duration_s,
            "sample_rate_hz": clip.sample_rate_hz,
            "chunk_count": len(chunk_records),
            "type_distribution": type_distribution,
        },
        "classification": session.classification.model_dump(mode="json"),
        "chunks": chunk_records,
        "plan": plan.to_canonical_dict() if plan else None,
        "plan_warnings": plan_warnings(plan) if plan else [],
        "red_flag": session.red_flag,
        "degraded": session.degraded,
        "critic_texts": [
            r.raw_output for r in session.history if r.role.value == "critic"
        ],
        "generation_history": [r.model_dump(mode="json") for r in session.history],
        "audit_log": [e.model_dump(mode="json") for e in session.review.audit_log],
    }
    return doc


def _esc(value) -> str:
    return html.escape(str(value if value is not None else ""))


def _plan_html(plan: dict) -> str:
    if not plan:
        return "<p>No therapy plan was generated for this session.</p>"
    parts = ["<h2>Therapy Recommendations</h2>"]
    explanation = plan.get("explanation") or {}
    goal = plan.get("primary_goal") or {}
    parts.append("<h3>Explanation</h3><ul>")
    for key in ("stuttering_type_definition", "patient_characteristics",
                "therapeutic_rationale"):
        parts.append(f"<li><b>{_esc(key)}</b>: {_esc(explanation.get(key))}</li>")
    parts.append("</ul><h3>Primary Goal</h3><ul>")
    for key in ("goal", "target", "baseline", "rationale"):
        parts.append(f"<li><b>{_esc(key)}</b>: {_esc(goal.get(key))}</li>")
    parts.append("</ul><h3>Step by Step Plan</h3>")
    for step in plan.get("steps") or []:
        parts.append(
            f"<h4>{_esc(step.get('name'))} ({_esc(step.get('week_range'))})</h4>"
            f"<p>{_esc(step.get('objective'))}</p><ul>"
        )
        for strat in step.get("strategies") or []:
            reasoning = strat.get("clinical_reasoning") or {}
            parts.append(
                f"<li><b>{_esc(strat.get('name'))}</b>: "
                f"{_esc(strat.get('description'))}<br>"
                f"<i>Instructions:</i> {_esc(strat.get('instructions'))}<br>"
                f"<i>Observation:</i> {_esc(reasoning.get('observation'))}<br>"
                f"<i>Rationale:</i> {_esc(reasoning.get('clinicalRationale'))}<br>"
                f"<i>Expected outcome:</i> {_esc(reasoning.get('expectedOutcome'))}<br>"
                f"<i>Evidence base:</i> {_esc(reasoning.get('evidenceBase'))}</li>"
            )
        parts.append("</ul>")
    return "".join(parts)


def render_html(doc: dict, approved: bool) -> str:
    """Standalone clinical-record HTML. Unapproved exports carry a DRAFT
    watermark rather than being forbidden, so clinicians can print drafts."""
    summary = doc["analysis_summary"]
    classification = doc["classification"]

    watermark = "" if approved else (
        '<div class="watermark">DRAFT — NOT APPROVED</div>'
    )

    dist_rows = "".join(
        f"<tr><td>{_esc(t)}</td><td>{c}</td></tr>"
        for t, c in sorted(summary["type_distribution"].items())
    )
    chunk_rows = "".join(
        f"<tr><td>{r['index']}</td>"
        f"<td>{r['start_s']:.1f}–{r['end_s']:.1f}s</td>"
        f"<td>{_esc(r['type'])}</td>"
        f"<td>{r['confidence']:.2f}</td>"
        f"<td>{_esc(r['transcript'] or '')}</td>"
        f"<td>{_esc(' '.join(r['phonemes'] or []))}</td></tr>"
        for r in doc["chunks"]
    )
    phoneme_items = "".join(
        f"<li>/{_esc(p)}/ (ratio {ratio:.2f})</li>"
        for p, ratio in classification.get("problematic_phonemes", [])
    )
    audit_rows = "".join(
        f"<tr><td>{_esc(e['timestamp'])}</td><td>{_esc(e['clinician_id'])}</td>"
        f"<td>{_esc(e['action'])}</td><td>{_esc(e.get('feedback') or '')}</td>"
        f"<td>{_esc(e['resulting_state'])}</td></tr>"
        for e in doc["audit_log"]
    )
    history_rows = "".join(
        f"<tr><td>{r['round']}</td><td>{_esc(r['role'])}</td>"
        f"<td>{'yes' if r['parsed_ok'] else 'no'}</td></tr>"
        for r in doc["generation_history"]
    )
    red_flag_banner = (
        '<p class="redflag">URGENT CLINICAL NOTE present in plan — '
        "immediate human assessment recommended.</p>"
        if doc.get("red_flag") else ""
    )

    return f"""<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Therapy Session Report {_esc(doc['sessionId'])}</title>
<style>
body {{ font-family: sans-serif; margin: 2rem; }}
table {{ border-collapse: collapse; }}
td, th {{ border: 1px solid #999; padding: 4px 8px; }}
.watermark {{ color: #b00; border: 2px solid #b00; padding: 8px;
             font-weight: bold; display: inline-block; }}
.redflag {{ color: #b00; font-weight: bold; }}
</style>
</head>
<body>
{watermark}
<h1>Speech Therapy Session Report</h1>
<p>Session: {_esc(doc['sessionId'])} · Mode: {_esc(doc['mode'])} ·
State: {_esc(doc['lifecycle'])}</p>
{red_flag_banner}

<h2>Analysis Summary</h2>
<p>Duration: {summary['duration_s']:.1f}s · Sample rate:
{summary['sample_rate_hz']} Hz · Chunks: {summary['chunk_count']}</p>
<table><tr><th>Type</th><th>Chunks</th></tr>{dist_rows}</table>

<h2>Overall Classification</h2>
<ul>
<li>Primary type: {_esc(classification['primary_type'])}</li>
<li>Secondary type: {_esc(classification.get('secondary_type') or 'none')}</li>
<li>Severity: {_esc(classification['severity'])}</li>
<li>Stuttering percentage: {classification['stuttering_pct']:.1f}%</li>
<li>Weighted confidence: {classification['weighted_confidence']:.3f}</li>
</ul>
<h3>Problematic Phonemes</h3>
<ul>{phoneme_items or '<li>none identified</li>'}</ul>

<h2>Chunk Analysis</h2>
<table>
<tr><th>#</th><th>Time</th><th>Type</th><th>Confidence</th>
<th>Transcript</th><th>Phonemes</th></tr>
{chunk_rows}
</table>

{_plan_html(doc.get('plan'))}

<h2>Generation History</h2>
<table><tr><th>Round</th><th>Role</th><th>Parsed</th></tr>{history_rows}</table>

<h2>Audit Log</h2>
<table>
<tr><th>Timestamp</th><th>Clinician</th><th>Action</th><th>Feedback</th>
<th>Resulting state</th></tr>
{audit_rows}
</table>
</body>
</html>
"""
