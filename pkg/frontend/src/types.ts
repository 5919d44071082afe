/** Wire types mirroring the session API's JSON documents. */

export type StutterType =
  | "Prolongation"
  | "Block"
  | "SoundRepetition"
  | "WordRepetition"
  | "Interjection"
  | "Fluent";

export type LifecycleState =
  | "Queued"
  | "Processing"
  | "ResultsReady"
  | "PendingReview"
  | "Revising"
  | "Approved"
  | "Rejected"
  | "Failed";

export interface SessionStatus {
  lifecycle: LifecycleState;
  stage: string | null;
  progress: number;
  reason?: string;
}

export interface ChunkRecord {
  index: number;
  start_s: number;
  end_s: number;
  type: StutterType;
  confidence: number;
  transcript: string | null;
  phonemes: string[] | null;
  label_probs: Record<string, number>;
}

export interface ClinicalReasoning {
  observation: string;
  clinicalRationale: string;
  expectedOutcome: string;
  evidenceBase: string;
}

export interface Strategy {
  name: string;
  description: string;
  instructions: string;
  clinical_reasoning: ClinicalReasoning;
}

export interface PlanStep {
  name: string;
  week_range: string;
  objective: string;
  strategies: Strategy[];
}

export interface TherapyPlan {
  explanation: {
    stuttering_type_definition: string;
    patient_characteristics: string;
    therapeutic_rationale: string;
  };
  primary_goal: {
    goal: string;
    target: string;
    baseline: string;
    rationale: string;
  };
  steps: PlanStep[];
  urgent_flag?: boolean;
}

export interface Classification {
  primary_type: StutterType;
  secondary_type: StutterType | null;
  weighted_confidence: number;
  severity: string;
  stuttering_pct: number;
  problematic_phonemes?: [string, number][];
}

export interface GenerationRecord {
  role: string;
  round: number;
  raw_output: string;
  parsed_ok: boolean;
}

export interface AuditRecord {
  timestamp: string;
  clinician_id: string;
  action: string;
  feedback: string | null;
  resulting_state: string;
}

export interface ResultDocument {
  sessionId: string;
  mode: "classification_only" | "full";
  lifecycle: LifecycleState;
  createdAt: string;
  analysis_summary: {
    duration_s: number;
    sample_rate_hz: number;
    chunk_count: number;
    type_distribution: Record<string, number>;
  };
  classification: Classification;
  chunks: ChunkRecord[];
  plan: TherapyPlan | null;
  plan_warnings: string[];
  red_flag: boolean;
  degraded: boolean;
  critic_texts: string[];
  generation_history: GenerationRecord[];
  audit_log: AuditRecord[];
}

export interface ReviewRequest {
  action: "approve" | "reject" | "modify";
  clinicianId: string;
  feedback?: string;
}
