/** Pure queue/editor state transitions, kept out of the DOM for testability. */

import type { OutcomeRecord, SyntaxFindingRecord } from "./types.js";

export interface Banner {
  tone: "info" | "error" | "conflict";
  message: string;
}

export interface QueueState {
  cards: OutcomeRecord[];
  banners: Banner[];
}

export const emptyQueue: QueueState = { cards: [], banners: [] };

/** Replace the card list with a fresh fetch (server order: newest first),
 * keeping any banners that are still on screen. */
export function mergeQueue(state: QueueState, fetched: OutcomeRecord[]): QueueState {
  return { cards: [...fetched], banners: state.banners };
}

export function removeCard(state: QueueState, outcomeId: string): QueueState {
  return {
    cards: state.cards.filter((card) => card.id !== outcomeId),
    banners: state.banners,
  };
}

export type DecisionResult = "applied" | "conflict" | "invalid";

/** Apply the result of a decision submission to the queue.
 *
 * applied: the card leaves the queue silently.
 * conflict: someone else decided first; the card leaves and a non-blocking
 *           banner explains why.
 * invalid: e.g. a rejected edit; the card stays pending.
 */
export function applyDecisionResult(
  state: QueueState,
  outcomeId: string,
  result: DecisionResult,
  message = "",
): QueueState {
  if (result === "invalid") {
    return state;
  }
  const next = removeCard(state, outcomeId);
  if (result === "conflict") {
    return {
      cards: next.cards,
      banners: [
        ...next.banners,
        { tone: "conflict", message: message || `outcome ${outcomeId} was already decided elsewhere` },
      ],
    };
  }
  return next;
}

export function dismissBanner(state: QueueState, index: number): QueueState {
  return {
    cards: state.cards,
    banners: state.banners.filter((_, i) => i !== index),
  };
}

/** Group syntax findings by line for inline display next to the editor. */
export function findingsByLine(
  findings: SyntaxFindingRecord[],
): Map<number, string[]> {
  const byLine = new Map<number, string[]>();
  for (const finding of findings) {
    const messages = byLine.get(finding.line) ?? [];
    messages.push(`${finding.kind}: ${finding.detail}`);
    byLine.set(finding.line, messages);
  }
  return byLine;
}

/** The editor must round-trip script text byte-exactly: the UI never
 * rewrites what came from the API or what the reviewer typed. */
export function editorRoundTrip(text: string): string {
  return text;
}
