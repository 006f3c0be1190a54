/** Pure presentation helpers: badges, labels, and verdict summaries.
 * These format API payloads; they never compute correctness themselves. */

import type {
  AnalysisRecord,
  OutcomeRecord,
  RoundRecord,
  VerdictRecord,
} from "./types.js";

export type Tone = "ok" | "bad" | "warn" | "muted";

export interface Badge {
  label: string;
  tone: Tone;
}

export function verdictBadge(verdict: VerdictRecord | null): Badge {
  if (!verdict) {
    return { label: "not assessed", tone: "muted" };
  }
  return verdict.functionally_correct
    ? { label: "assessed correct", tone: "ok" }
    : { label: "flagged incorrect", tone: "bad" };
}

export function analysisLabel(analysis: AnalysisRecord): string {
  return `${analysis.kind}: ${analysis.outcome}`;
}

export function verdictSummary(verdict: VerdictRecord): string {
  const syntax = verdict.syntax.ok
    ? "syntax ok"
    : `syntax: ${verdict.syntax.findings.length} finding(s)`;
  return [syntax, analysisLabel(verdict.similarity), analysisLabel(verdict.difference)]
    .join(" / ");
}

export function statusBadge(status: string): Badge {
  switch (status) {
    case "confident":
      return { label: "confident", tone: "ok" };
    case "needs_review":
      return { label: "needs review", tone: "warn" };
    case "failed":
      return { label: "failed", tone: "bad" };
    case "running":
      return { label: "running", tone: "muted" };
    default:
      return { label: status, tone: "muted" };
  }
}

export function formatScore(total: number): string {
  return total.toFixed(4);
}

export function confidenceBadge(
  retrieved: [string, number] | null,
  threshold = 0.95,
): Badge | null {
  if (!retrieved) {
    return null;
  }
  const [, score] = retrieved;
  return score > threshold
    ? { label: `catalogue match ${formatScore(score)}`, tone: "ok" }
    : { label: `best catalogue score ${formatScore(score)}`, tone: "muted" };
}

export function roundTitle(index: number, round: RoundRecord): string {
  const base = index === 0 ? "initial script" : `refinement ${index}`;
  return round.note ? `${base} (${round.note})` : base;
}

/** Initial and final scripts of an outcome, for the side-by-side diff. */
export function diffSides(outcome: OutcomeRecord): { before: string; after: string } {
  const before = outcome.rounds.length ? outcome.rounds[0].script : outcome.final_script;
  return { before, after: outcome.final_script };
}

export function llmCallsLabel(calls: Record<string, number>): string {
  const parts = ["generator", "assessor", "refiner"]
    .filter((role) => role in calls)
    .map((role) => `${role} ${calls[role]}`);
  return parts.join(", ");
}
