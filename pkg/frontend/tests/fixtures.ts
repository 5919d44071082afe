/** Shared test fixtures: a representative result document and a WAV maker. */

import type { ResultDocument } from "../src/types.js";

export function makeWav(durationS: number, rate = 16000, freq = 220): Uint8Array {
  const n = Math.round(durationS * rate);
  const bytes = new Uint8Array(44 + 2 * n);
  const view = new DataView(bytes.buffer);
  const ascii = (offset: number, text: string) => {
    for (let i = 0; i < text.length; i++) bytes[offset + i] = text.charCodeAt(i);
  };
  ascii(0, "RIFF");
  view.setUint32(4, 36 + 2 * n, true);
  ascii(8, "WAVE");
  ascii(12, "fmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 1, true); // PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, rate, true);
  view.setUint32(28, rate * 2, true);
  view.setUint16(32, 2, true);
  view.setUint16(34, 16, true);
  ascii(36, "data");
  view.setUint32(40, 2 * n, true);
  for (let i = 0; i < n; i++) {
    const sample = Math.round(12000 * Math.sin((2 * Math.PI * freq * i) / rate));
    view.setInt16(44 + 2 * i, sample, true);
  }
  return bytes;
}

export function sampleDocument(): ResultDocument {
  const reasoning = {
    observation: "Prolongations cluster on fricatives.",
    clinicalRationale: "Light contact reduces articulatory tension.",
    expectedOutcome: "Shorter prolongation durations within four weeks.",
    evidenceBase: "Established fluency-shaping literature.",
  };
  return {
    sessionId: "sess-1",
    mode: "full",
    lifecycle: "PendingReview",
    createdAt: "2026-08-23T10:00:00+00:00",
    analysis_summary: {
      duration_s: 10,
      sample_rate_hz: 16000,
      chunk_count: 4,
      type_distribution: { Prolongation: 2, Block: 1, Fluent: 1 },
    },
    classification: {
      primary_type: "Prolongation",
      secondary_type: "Block",
      weighted_confidence: 0.72,
      severity: "severe",
      stuttering_pct: 75,
      problematic_phonemes: [["s", 2.5]],
    },
    chunks: [
      {
        index: 0, start_s: 0, end_s: 4, type: "Prolongation", confidence: 0.9,
        transcript: "sssso then", phonemes: ["s", "o"], label_probs: {},
      },
      {
        index: 1, start_s: 2, end_s: 6, type: "Prolongation", confidence: 0.7,
        transcript: "then we", phonemes: ["dh", "e", "n"], label_probs: {},
      },
      {
        index: 2, start_s: 4, end_s: 8, type: "Block", confidence: 0.6,
        transcript: null, phonemes: null, label_probs: {},
      },
      {
        index: 3, start_s: 6, end_s: 10, type: "Fluent", confidence: 0.8,
        transcript: "went home", phonemes: ["w", "e"], label_probs: {},
      },
    ],
    plan: {
      explanation: {
        stuttering_type_definition: "Prolongation is an audible extension of a sound.",
        patient_characteristics: "Adult with fricative prolongations.",
        therapeutic_rationale: "Fluency shaping with light articulatory contact.",
      },
      primary_goal: {
        goal: "Reduce prolongation frequency by half.",
        target: "Below 10% of syllables.",
        baseline: "20% of syllables prolonged.",
        rationale: "Gradual reduction sustains motivation.",
      },
      steps: [
        {
          name: "Awareness",
          week_range: "1-2",
          objective: "Identify prolongations in recorded speech.",
          strategies: [
            {
              name: "Self-monitoring",
              description: "Review recordings with the clinician.",
              instructions: "Mark each prolongation heard.",
              clinical_reasoning: reasoning,
            },
          ],
        },
        {
          name: "Light contact",
          week_range: "3-6",
          objective: "Produce fricatives with reduced tension.",
          strategies: [
            {
              name: "Easy onset",
              description: "Begin words with gentle airflow.",
              instructions: "Practice word lists daily.",
              clinical_reasoning: reasoning,
            },
          ],
        },
      ],
      urgent_flag: false,
    },
    plan_warnings: [],
    red_flag: false,
    degraded: false,
    critic_texts: ["Overall sound plan."],
    generation_history: [
      { role: "therapy_initial", round: 0, raw_output: "{}", parsed_ok: true },
      { role: "critic", round: 1, raw_output: "fine", parsed_ok: true },
      { role: "refine", round: 2, raw_output: "{}", parsed_ok: true },
    ],
    audit_log: [],
  };
}
