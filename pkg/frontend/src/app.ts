/** Review UI: pending queue, outcome detail with per-round diff, catalogue.
 *
 * Plain DOM, no framework; all correctness data is rendered verbatim from
 * API payloads and all state transitions live in state.ts / format.ts.
 */

import { ApiError, ServiceClient } from "./api.js";
import { diffLines, diffStats } from "./diff.js";
import {
  confidenceBadge,
  diffSides,
  llmCallsLabel,
  roundTitle,
  statusBadge,
  verdictBadge,
  verdictSummary,
  type Badge,
} from "./format.js";
import {
  applyDecisionResult,
  dismissBanner,
  emptyQueue,
  findingsByLine,
  mergeQueue,
  type QueueState,
} from "./state.js";
import type { OutcomeRecord, SyntaxFindingRecord } from "./types.js";

const POLL_KEY = "scriptsmith.pollSeconds";
const TOKEN_KEY = "scriptsmith.token";
const REVIEWER_KEY = "scriptsmith.reviewer";

const client = new ServiceClient({
  baseUrl: "",
  token: localStorage.getItem(TOKEN_KEY),
});

let queue: QueueState = emptyQueue;
let pollTimer: number | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function badgeEl(badge: Badge | null): HTMLElement | null {
  if (!badge) return null;
  return el("span", `badge badge-${badge.tone}`, badge.label);
}

function view(): HTMLElement {
  return document.getElementById("view") as HTMLElement;
}

function setView(...nodes: HTMLElement[]): void {
  const root = view();
  root.replaceChildren(...nodes);
}

function renderBanners(): void {
  const host = document.getElementById("banners") as HTMLElement;
  host.replaceChildren(
    ...queue.banners.map((banner, index) => {
      const node = el("div", `banner banner-${banner.tone}`, banner.message);
      const close = el("button", "banner-close", "dismiss");
      close.onclick = () => {
        queue = dismissBanner(queue, index);
        renderBanners();
      };
      node.append(close);
      return node;
    }),
  );
}

// ---- queue view ----------------------------------------------------------

async function refreshQueue(): Promise<void> {
  try {
    const pending = await client.listPending();
    queue = mergeQueue(queue, pending);
    if (location.hash === "" || location.hash === "#/queue") {
      renderQueue();
    }
  } catch (err) {
    showError(err);
  }
}

function renderQueue(): void {
  const container = el("div", "queue");

  const submit = el("div", "panel submit-panel");
  submit.append(el("h2", "", "New action"));
  const input = el("input") as HTMLInputElement;
  input.placeholder = "describe the remediation action...";
  const button = el("button", "primary", "Generate script");
  button.onclick = async () => {
    const statement = input.value.trim();
    if (!statement) return;
    button.disabled = true;
    try {
      await client.submitAction(statement);
      input.value = "";
      window.setTimeout(refreshQueue, 300);
    } catch (err) {
      showError(err);
    } finally {
      button.disabled = false;
    }
  };
  submit.append(input, button);
  container.append(submit);

  const heading = el("h2", "", `Pending review (${queue.cards.length})`);
  container.append(heading);

  if (queue.cards.length === 0) {
    container.append(el("p", "muted", "Nothing waiting for review."));
  }
  for (const outcome of queue.cards) {
    container.append(queueCard(outcome));
  }
  setView(container);
  renderBanners();
}

function queueCard(outcome: OutcomeRecord): HTMLElement {
  const card = el("div", "card");
  const head = el("div", "card-head");
  head.append(el("span", "card-id", outcome.id));
  const status = badgeEl(statusBadge(outcome.status));
  if (status) head.append(status);
  const verdict = outcome.rounds.length
    ? badgeEl(verdictBadge(outcome.rounds[0].verdict))
    : null;
  if (verdict) head.append(verdict);
  const refined = outcome.rounds.length > 1;
  if (refined) head.append(el("span", "badge badge-warn", "refined"));
  const confidence = badgeEl(confidenceBadge(outcome.retrieved));
  if (confidence) head.append(confidence);
  card.append(head);
  card.append(el("div", "card-statement", outcome.statement));
  card.append(el("pre", "card-script", outcome.final_script));
  card.onclick = () => {
    location.hash = `#/outcome/${outcome.id}`;
  };
  return card;
}

// ---- outcome detail ----------------------------------------------------------

async function renderDetail(outcomeId: string): Promise<void> {
  let outcome: OutcomeRecord;
  try {
    const record = await client.getOutcome(outcomeId);
    if (record.status === "running") {
      setView(el("p", "muted", `${outcomeId} is still running...`));
      window.setTimeout(() => {
        if (location.hash === `#/outcome/${outcomeId}`) renderDetail(outcomeId);
      }, 1000);
      return;
    }
    outcome = record as OutcomeRecord;
  } catch (err) {
    showError(err);
    return;
  }

  const container = el("div", "detail");
  const back = el("a", "back-link", "back to queue") as HTMLAnchorElement;
  back.href = "#/queue";
  container.append(back);

  const head = el("div", "card-head");
  head.append(el("h2", "", outcome.statement));
  const status = badgeEl(statusBadge(outcome.status));
  if (status) head.append(status);
  container.append(head);
  container.append(
    el("p", "muted", `${outcome.id} / source: ${outcome.source} / llm calls: ` +
      llmCallsLabel(outcome.llm_calls)),
  );
  if (outcome.error) {
    container.append(el("p", "banner banner-error", outcome.error));
  }

  outcome.rounds.forEach((round, index) => {
    const panel = el("div", "panel");
    const title = el("div", "panel-title");
    title.append(el("strong", "", roundTitle(index, round)));
    const badge = badgeEl(verdictBadge(round.verdict));
    if (badge) title.append(badge);
    panel.append(title);
    if (round.feedback) {
      panel.append(el("p", "feedback", `model feedback: ${round.feedback.explanation}`));
    }
    panel.append(el("pre", "script", round.script));
    if (round.verdict) {
      panel.append(el("p", "muted", verdictSummary(round.verdict)));
      if (!round.verdict.syntax.ok) {
        for (const finding of round.verdict.syntax.findings) {
          panel.append(el("p", "finding",
            `line ${finding.line}: ${finding.kind} (${finding.detail})`));
        }
      }
    }
    container.append(panel);
  });

  const sides = diffSides(outcome);
  if (sides.before !== sides.after) {
    container.append(diffPanel(sides.before, sides.after));
  }

  container.append(decisionPanel(outcome));
  setView(container);
  renderBanners();
}

function diffPanel(before: string, after: string): HTMLElement {
  const ops = diffLines(before, after);
  const stats = diffStats(ops);
  const panel = el("div", "panel");
  panel.append(el("div", "panel-title",
    `initial vs final (+${stats.added} -${stats.removed})`));
  const pre = el("pre", "diff");
  for (const op of ops) {
    const marker = op.kind === "add" ? "+" : op.kind === "del" ? "-" : " ";
    const line = el("div", `diff-${op.kind}`, `${marker} ${op.text}`);
    pre.append(line);
  }
  panel.append(pre);
  return panel;
}

function decisionPanel(outcome: OutcomeRecord): HTMLElement {
  const panel = el("div", "panel decision-panel");
  panel.append(el("div", "panel-title", "Review decision"));

  if (outcome.decision) {
    panel.append(el("p", "muted",
      `already decided: ${outcome.decision.decision} by ${outcome.decision.reviewer}`));
    return panel;
  }
  if (outcome.status !== "needs_review") {
    panel.append(el("p", "muted", "not reviewable in this state"));
    return panel;
  }

  const editor = el("textarea", "editor") as HTMLTextAreaElement;
  editor.value = outcome.final_script;
  editor.rows = Math.max(4, outcome.final_script.split("\n").length + 1);
  panel.append(editor);

  const inlineErrors = el("div", "inline-errors");
  panel.append(inlineErrors);

  const reviewer = el("input", "reviewer") as HTMLInputElement;
  reviewer.placeholder = "reviewer";
  reviewer.value = localStorage.getItem(REVIEWER_KEY) ?? "";
  panel.append(reviewer);

  const buttons = el("div", "buttons");
  const approve = el("button", "primary", "Approve");
  const saveEdit = el("button", "", "Submit edit");
  const reject = el("button", "danger", "Reject");
  buttons.append(approve, saveEdit, reject);
  panel.append(buttons);

  const decide = async (
    decision: "approve" | "edit" | "reject",
    editedScript?: string,
  ) => {
    const who = reviewer.value.trim() || "reviewer";
    localStorage.setItem(REVIEWER_KEY, who);
    if (decision !== "edit" && !window.confirm(`${decision} ${outcome.id}?`)) {
      return;
    }
    inlineErrors.replaceChildren();
    try {
      await client.submitDecision(outcome.id, {
        decision,
        reviewer: who,
        ...(editedScript !== undefined ? { edited_script: editedScript } : {}),
      });
      queue = applyDecisionResult(queue, outcome.id, "applied");
      location.hash = "#/queue";
      refreshQueue();
    } catch (err) {
      if (err instanceof ApiError && err.code === "conflict") {
        queue = applyDecisionResult(queue, outcome.id, "conflict", err.message);
        location.hash = "#/queue";
        renderQueue();
        return;
      }
      if (err instanceof ApiError && err.code === "invalid") {
        const detail = err.detail as { findings?: SyntaxFindingRecord[] } | null;
        const findings = detail?.findings ?? [];
        if (findings.length) {
          for (const [line, messages] of findingsByLine(findings)) {
            inlineErrors.append(
              el("p", "finding", `line ${line}: ${messages.join("; ")}`));
          }
        } else {
          inlineErrors.append(el("p", "finding", err.message));
        }
        return;
      }
      showError(err);
    }
  };

  approve.onclick = () => decide("approve");
  reject.onclick = () => decide("reject");
  saveEdit.onclick = () => decide("edit", editor.value);
  return panel;
}

// ---- catalogue view ---------------------------------------------------------

async function renderCatalogue(): Promise<void> {
  const container = el("div", "catalogue");
  container.append(el("h2", "", "Catalogue"));

  const search = el("div", "panel submit-panel");
  const input = el("input") as HTMLInputElement;
  input.placeholder = "search the catalogue...";
  const button = el("button", "primary", "Search");
  const results = el("div");
  button.onclick = async () => {
    try {
      const resp = await client.search(input.value.trim() || " ", 10);
      results.replaceChildren(
        el("p", "muted",
          resp.high_confidence ? "high-confidence match found" : "no high-confidence match"),
        ...resp.hits.map((hit) => {
          const card = el("div", "card");
          const head = el("div", "card-head");
          head.append(el("span", "card-id", hit.id));
          if (hit.score) {
            head.append(el("span", "badge badge-muted",
              `score ${hit.score.total.toFixed(4)}`));
          }
          head.append(el("span", "badge badge-muted", hit.provenance));
          card.append(head, el("div", "card-statement", hit.statement),
            el("pre", "card-script", hit.script));
          return card;
        }),
      );
    } catch (err) {
      showError(err);
    }
  };
  search.append(input, button, results);
  container.append(search);

  try {
    const entries = await client.entries();
    container.append(el("h3", "", `All entries (${entries.length})`));
    for (const entry of entries) {
      const card = el("div", "card");
      const head = el("div", "card-head");
      head.append(el("span", "card-id", entry.id),
        el("span", "badge badge-muted", entry.provenance));
      card.append(head, el("div", "card-statement", entry.statement),
        el("pre", "card-script", entry.script));
      container.append(card);
    }
  } catch (err) {
    showError(err);
  }
  setView(container);
  renderBanners();
}

// ---- settings and shell ------------------------------------------------------

function renderSettings(): void {
  const host = document.getElementById("settings") as HTMLElement;
  const token = el("input") as HTMLInputElement;
  token.type = "password";
  token.placeholder = "bearer token (optional)";
  token.value = localStorage.getItem(TOKEN_KEY) ?? "";
  token.onchange = () => {
    localStorage.setItem(TOKEN_KEY, token.value);
    client.setToken(token.value);
  };

  const poll = el("input") as HTMLInputElement;
  poll.type = "number";
  poll.min = "1";
  poll.value = localStorage.getItem(POLL_KEY) ?? "5";
  poll.title = "queue poll interval (seconds)";
  poll.onchange = () => {
    localStorage.setItem(POLL_KEY, poll.value);
    startPolling();
  };

  host.replaceChildren(token, poll);
}

function startPolling(): void {
  if (pollTimer !== null) {
    window.clearInterval(pollTimer);
  }
  const seconds = Math.max(1, Number(localStorage.getItem(POLL_KEY) ?? "5"));
  pollTimer = window.setInterval(refreshQueue, seconds * 1000);
}

function showError(err: unknown): void {
  const message = err instanceof Error ? err.message : String(err);
  queue = { cards: queue.cards, banners: [...queue.banners, { tone: "error", message }] };
  renderBanners();
}

function route(): void {
  const hash = location.hash || "#/queue";
  if (hash.startsWith("#/outcome/")) {
    renderDetail(hash.slice("#/outcome/".length));
  } else if (hash === "#/catalogue") {
    renderCatalogue();
  } else {
    renderQueue();
  }
}

window.addEventListener("hashchange", route);
window.addEventListener("DOMContentLoaded", () => {
  renderSettings();
  route();
  refreshQueue();
  startPolling();
});
