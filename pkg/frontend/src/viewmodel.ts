/** Pure projection of the API result document into render-ready view state.
 * Nothing here computes clinical values; every figure is copied from the
 * document so the display provably matches the server. */

import type {
  AuditRecord,
  ChunkRecord,
  PlanStep,
  ResultDocument,
  StutterType,
  TherapyPlan,
} from "./types.js";

/** Fixed six-color palette: color encodes chunk type, opacity encodes
 * classification confidence. */
export const TYPE_COLORS: Record<StutterType, string> = {
  Prolongation: "#d95f02",
  Block: "#7570b3",
  SoundRepetition: "#e7298a",
  WordRepetition: "#66a61e",
  Interjection: "#e6ab02",
  Fluent: "#1b9e77",
};

export interface HeatmapCell {
  index: number;
  timeRange: [number, number];
  type: StutterType;
  confidence: number;
  color: string;
  /** Cell opacity in [0, 1], taken directly from confidence. */
  opacity: number;
  transcript: string | null;
  phonemes: string[] | null;
  /** URL the cell plays when clicked. */
  audioPath: string;
  /** Hover tooltip lines; the phoneme row is omitted when absent. */
  tooltip: string[];
}

export interface DonutSegment {
  label: string;
  count: number;
  fraction: number;
  color: string;
}

export interface PlanTreeNode {
  label: string;
  detail?: string;
  children: PlanTreeNode[];
}

export interface ViewModel {
  sessionId: string;
  lifecycle: ResultDocument["lifecycle"];
  summary: {
    durationS: number;
    chunkCount: number;
    mode: string;
    severity: string;
    stutteringPct: number;
    primaryType: string;
    secondaryType: string | null;
    weightedConfidence: number;
    problematicPhonemes: [string, number][];
    redFlag: boolean;
    degraded: boolean;
    warnings: string[];
  };
  cells: HeatmapCell[];
  donut: DonutSegment[];
  planTree: PlanTreeNode | null;
  auditList: AuditRecord[];
  generationHistory: ResultDocument["generation_history"];
}

function formatSeconds(s: number): string {
  return `${s.toFixed(1)}s`;
}

export function buildTooltip(chunk: ChunkRecord): string[] {
  const lines = [
    `Time: ${formatSeconds(chunk.start_s)}–${formatSeconds(chunk.end_s)}`,
    `Type: ${chunk.type}`,
    `Confidence: ${(chunk.confidence * 100).toFixed(1)}%`,
  ];
  if (chunk.phonemes && chunk.phonemes.length > 0) {
    lines.push(`Phonemes: ${chunk.phonemes.join(" ")}`);
  }
  if (chunk.transcript) {
    lines.push(`Text: ${chunk.transcript}`);
  }
  return lines;
}

export function buildHeatmapCells(doc: ResultDocument): HeatmapCell[] {
  return doc.chunks.map((chunk) => ({
    index: chunk.index,
    timeRange: [chunk.start_s, chunk.end_s],
    type: chunk.type,
    confidence: chunk.confidence,
    color: TYPE_COLORS[chunk.type],
    opacity: chunk.confidence,
    transcript: chunk.transcript,
    phonemes: chunk.phonemes,
    audioPath: `/api/sessions/${doc.sessionId}/chunks/${chunk.index}/audio`,
    tooltip: buildTooltip(chunk),
  }));
}

export function buildDonut(doc: ResultDocument): DonutSegment[] {
  const total = doc.analysis_summary.chunk_count;
  const distribution = doc.analysis_summary.type_distribution;
  return Object.keys(distribution)
    .sort()
    .map((label) => ({
      label,
      count: distribution[label]!,
      fraction: distribution[label]! / total,
      color: TYPE_COLORS[label as StutterType] ?? "#999999",
    }));
}

function strategyNodes(step: PlanStep): PlanTreeNode[] {
  return step.strategies.map((strategy) => ({
    label: strategy.name,
    detail: strategy.description,
    children: [
      { label: "Instructions", detail: strategy.instructions, children: [] },
      {
        label: "Clinical reasoning",
        children: [
          {
            label: "Observation",
            detail: strategy.clinical_reasoning.observation,
            children: [],
          },
          {
            label: "Rationale",
            detail: strategy.clinical_reasoning.clinicalRationale,
            children: [],
          },
          {
            label: "Expected outcome",
            detail: strategy.clinical_reasoning.expectedOutcome,
            children: [],
          },
          {
            label: "Evidence base",
            detail: strategy.clinical_reasoning.evidenceBase,
            children: [],
          },
        ],
      },
    ],
  }));
}

export function buildPlanTree(plan: TherapyPlan): PlanTreeNode {
  return {
    label: "Therapy plan",
    children: [
      {
        label: "Explanation",
        children: [
          {
            label: "Type definition",
            detail: plan.explanation.stuttering_type_definition,
            children: [],
          },
          {
            label: "Patient characteristics",
            detail: plan.explanation.patient_characteristics,
            children: [],
          },
          {
            label: "Therapeutic rationale",
            detail: plan.explanation.therapeutic_rationale,
            children: [],
          },
        ],
      },
      {
        label: "Primary goal",
        detail: plan.primary_goal.goal,
        children: [
          { label: "Target", detail: plan.primary_goal.target, children: [] },
          { label: "Baseline", detail: plan.primary_goal.baseline, children: [] },
          { label: "Rationale", detail: plan.primary_goal.rationale, children: [] },
        ],
      },
      {
        label: "Steps",
        children: plan.steps.map((step) => ({
          label: `${step.name} (${step.week_range})`,
          detail: step.objective,
          children: strategyNodes(step),
        })),
      },
    ],
  };
}

export function buildViewModel(doc: ResultDocument): ViewModel {
  return {
    sessionId: doc.sessionId,
    lifecycle: doc.lifecycle,
    summary: {
      durationS: doc.analysis_summary.duration_s,
      chunkCount: doc.analysis_summary.chunk_count,
      mode: doc.mode,
      severity: doc.classification.severity,
      stutteringPct: doc.classification.stuttering_pct,
      primaryType: doc.classification.primary_type,
      secondaryType: doc.classification.secondary_type,
      weightedConfidence: doc.classification.weighted_confidence,
      problematicPhonemes: doc.classification.problematic_phonemes ?? [],
      redFlag: doc.red_flag,
      degraded: doc.degraded,
      warnings: doc.plan_warnings,
    },
    cells: buildHeatmapCells(doc),
    donut: buildDonut(doc),
    planTree: doc.plan ? buildPlanTree(doc.plan) : null,
    auditList: doc.audit_log,
    generationHistory: doc.generation_history,
  };
}

/** Client-side validation for the review panel: modify needs feedback. */
export function validateReviewInput(
  action: "approve" | "reject" | "modify",
  feedback: string,
): string | null {
  if (action === "modify" && feedback.trim().length === 0) {
    return "Modification requires written feedback for the revision.";
  }
  return null;
}
