/** Payload shapes of the /v1 service API. The UI never re-derives any of
 * these values; every verdict, score, and finding shown on screen comes
 * verbatim from these records. */

export interface SyntaxFindingRecord {
  line: number;
  kind: string;
  detail: string;
}

export interface SyntaxReportRecord {
  ok: boolean;
  findings: SyntaxFindingRecord[];
  checker_id: string;
}

export type AnalysisOutcome = "aligned" | "deviates" | "indeterminate";

export interface AnalysisRecord {
  outcome: AnalysisOutcome;
  rationale: string;
  kind: "similarity" | "difference";
}

export interface VerdictRecord {
  functionally_correct: boolean;
  syntax: SyntaxReportRecord;
  functionality: string;
  similarity: AnalysisRecord;
  difference: AnalysisRecord;
}

export interface FeedbackRecord {
  explanation: string;
  source: string;
  round: number;
}

export interface RoundRecord {
  script: string;
  verdict: VerdictRecord | null;
  feedback: FeedbackRecord | null;
  note: string;
}

export interface DecisionRecord {
  outcome_id: string;
  decision: string;
  reviewer: string;
  edited_script: string | null;
  note: string;
}

export interface OutcomeRecord {
  id: string;
  statement: string;
  source: string;
  final_script: string;
  status: string;
  rounds: RoundRecord[];
  retrieved: [string, number] | null;
  llm_calls: Record<string, number>;
  error: string;
  decision: DecisionRecord | null;
  timings?: Record<string, number>;
}

/** GET /v1/outcomes/{id} while the pipeline is still running. */
export interface RunningPlaceholder {
  id: string;
  status: "running";
}

export interface ScoreRecord {
  total: number;
  cosine_part: number;
  entity_part: number;
  alpha: number;
  mode: string;
}

export interface CatalogueHit {
  id: string;
  statement: string;
  script: string;
  provenance: string;
  created_at: string;
  source_outcome_id: string | null;
  score?: ScoreRecord;
}

export interface SearchResponse {
  query: string;
  high_confidence: boolean;
  hits: CatalogueHit[];
}

export interface HealthResponse {
  status: string;
  version: string;
  backends: string[];
  catalogue_size: number;
}

export type DecisionKind = "approve" | "edit" | "reject";

export interface DecisionRequest {
  decision: DecisionKind;
  reviewer: string;
  edited_script?: string;
  note?: string;
}
