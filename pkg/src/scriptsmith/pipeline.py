"""Orchestration: retrieve-or-generate -> assess -> refine -> human review.

Every generated script ends at a human review gate regardless of how the
assessment went; only catalogue hits bypass review, because their scripts
were reviewed when they entered the catalogue.  Approve and edit decisions
grow the catalogue, reject never touches it, and each outcome accepts
exactly one decision.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .assessment import AssessmentVerdict, assess
from .catalogue import Catalogue, Provenance
from .config import PipelineConfig
from .errors import (
    AlreadyDecided,
    BackendUnreachable,
    InvalidInput,
    ScriptsmithError,
    SyntaxRejected,
    UnknownOutcome,
)
from .gateway import CountingGateway
from .generation import BashScript, generate_script
from .refinement import Feedback, FeedbackSource, refine_loop
from .syntax import check_syntax


class Source(str, Enum):
    CATALOGUE_HIT = "catalogue_hit"
    GENERATED = "generated"


class Status(str, Enum):
    CONFIDENT = "confident"
    NEEDS_REVIEW = "needs_review"
    FAILED = "failed"


class Decision(str, Enum):
    APPROVE = "approve"
    EDIT = "edit"
    REJECT = "reject"


@dataclass(frozen=True)
class ReviewDecision:
    outcome_id: str
    decision: Decision
    reviewer: str
    edited_script: str | None = None
    note: str = ""

    def to_record(self) -> dict:
        return {
            "outcome_id": self.outcome_id,
            "decision": self.decision.value,
            "reviewer": self.reviewer,
            "edited_script": self.edited_script,
            "note": self.note,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ReviewDecision":
        return cls(
            outcome_id=str(rec["outcome_id"]),
            decision=Decision(rec["decision"]),
            reviewer=str(rec.get("reviewer", "")),
            edited_script=rec.get("edited_script"),
            note=str(rec.get("note", "")),
        )


@dataclass(frozen=True)
class RoundRecord:
    script: BashScript
    verdict: AssessmentVerdict | None = None
    feedback: Feedback | None = None
    note: str = ""

    def to_record(self) -> dict:
        fb = None
        if self.feedback is not None:
            fb = {
                "explanation": self.feedback.explanation,
                "source": self.feedback.source.value,
                "round": self.feedback.round,
            }
        return {
            "script": self.script.text,
            "verdict": self.verdict.to_record() if self.verdict else None,
            "feedback": fb,
            "note": self.note,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "RoundRecord":
        fb = rec.get("feedback")
        return cls(
            script=BashScript(rec["script"]),
            verdict=(AssessmentVerdict.from_record(rec["verdict"])
                     if rec.get("verdict") else None),
            feedback=(Feedback(fb["explanation"], FeedbackSource(fb["source"]),
                               int(fb["round"])) if fb else None),
            note=str(rec.get("note", "")),
        )


@dataclass
class PipelineOutcome:
    id: str
    statement: str
    source: Source
    final_script: BashScript
    status: Status
    rounds: list[RoundRecord] = field(default_factory=list)
    retrieved: tuple[str, float] | None = None
    llm_calls: dict[str, int] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    error: str = ""
    decision: ReviewDecision | None = None

    def is_pending(self) -> bool:
        return self.status is Status.NEEDS_REVIEW and self.decision is None

    def to_record(self, include_timings: bool = True) -> dict:
        rec = {
            "id": self.id,
            "statement": self.statement,
            "source": self.source.value,
            "final_script": self.final_script.text,
            "status": self.status.value,
            "rounds": [r.to_record() for r in self.rounds],
            "retrieved": list(self.retrieved) if self.retrieved else None,
            "llm_calls": dict(self.llm_calls),
            "error": self.error,
            "decision": self.decision.to_record() if self.decision else None,
        }
        if include_timings:
            rec["timings"] = dict(self.timings)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "PipelineOutcome":
        retrieved = rec.get("retrieved")
        dec = rec.get("decision")
        return cls(
            id=str(rec["id"]),
            statement=str(rec["statement"]),
            source=Source(rec["source"]),
            final_script=BashScript(rec["final_script"]),
            status=Status(rec["status"]),
            rounds=[RoundRecord.from_record(r) for r in rec.get("rounds", [])],
            retrieved=(str(retrieved[0]), float(retrieved[1])) if retrieved else None,
            llm_calls=dict(rec.get("llm_calls", {})),
            timings=dict(rec.get("timings", {})),
            error=str(rec.get("error", "")),
            decision=ReviewDecision.from_record(dec) if dec else None,
        )


def _retrying(fn, cfg: PipelineConfig):
    """Retry a stage on transport errors; other failures pass straight through."""
    for attempt in range(cfg.backend_retries + 1):
        try:
            return fn()
        except BackendUnreachable:
            if attempt == cfg.backend_retries:
                raise
            time.sleep(cfg.retry_backoff_s)


def run_action(statement: str, cfg: PipelineConfig, gateway,
               catalogue: Catalogue | None = None,
               outcome_id: str | None = None) -> PipelineOutcome:
    """Produce a script for one action statement with full trace.

    Retrieval runs first; a high-confidence hit short-circuits with zero LLM
    calls.  Otherwise generate, assess, and (only when flagged incorrect)
    refine.  Backend errors surviving the retry budget yield a failed
    outcome rather than an exception, so batches stay isolated per item.
    """
    if not statement.strip():
        raise InvalidInput("action statement must be non-empty")
    counting = CountingGateway(gateway)
    oid = outcome_id or f"o-{uuid.uuid4().hex[:12]}"
    started = time.perf_counter()
    retrieved: tuple[str, float] | None = None

    def outcome(**kwargs) -> PipelineOutcome:
        return PipelineOutcome(
            id=oid, statement=statement, retrieved=retrieved,
            llm_calls=counting.by_role(),
            timings={"total_s": round(time.perf_counter() - started, 6)},
            **kwargs,
        )

    try:
        if catalogue is not None and len(catalogue) > 0:
            result = catalogue.retrieve(
                statement, 1, alpha=cfg.alpha, mode=cfg.score_mode,
                threshold=cfg.catalogue_threshold,
            )
            best = result.best()
            if best is not None:
                retrieved = (best[0].id, best[1].total)
            if result.high_confidence and best is not None:
                return outcome(source=Source.CATALOGUE_HIT,
                               final_script=best[0].script,
                               status=Status.CONFIDENT)

        generated = _retrying(lambda: generate_script(counting, statement, cfg), cfg)
        verdict = _retrying(lambda: assess(counting, generated.script, statement, cfg), cfg)
        rounds = [RoundRecord(script=generated.script, verdict=verdict)]
        final = generated.script

        if not verdict.functionally_correct and cfg.max_refine_rounds > 0:
            refinement = _retrying(
                lambda: refine_loop(counting, statement, generated.script, verdict, cfg),
                cfg,
            )
            for step in refinement.trace:
                rounds.append(RoundRecord(script=step.script, verdict=step.verdict,
                                          feedback=step.feedback, note=step.note))
            final = refinement.refined

        return outcome(source=Source.GENERATED, final_script=final,
                       status=Status.NEEDS_REVIEW, rounds=rounds)
    except ScriptsmithError as exc:
        return outcome(source=Source.GENERATED, final_script=BashScript(""),
                       status=Status.FAILED,
                       error=f"{type(exc).__name__}: {exc}")


def run_batch(statements: list[str], cfg: PipelineConfig, gateway,
              catalogue: Catalogue | None = None,
              id_prefix: str = "o") -> list[PipelineOutcome]:
    """Run many actions with bounded parallelism; output order = input order.

    Outcome ids are positional, so a batch over the same inputs and fixtures
    is reproducible at any parallelism.  One failing item never aborts the
    rest.
    """
    if not statements:
        return []
    ids = [f"{id_prefix}-{i:04d}" for i in range(1, len(statements) + 1)]

    def safe(statement: str, oid: str) -> PipelineOutcome:
        try:
            return run_action(statement, cfg, gateway, catalogue, oid)
        except Exception as exc:  # isolation: even bugs stay per-item
            return PipelineOutcome(
                id=oid, statement=statement, source=Source.GENERATED,
                final_script=BashScript(""), status=Status.FAILED,
                error=f"{type(exc).__name__}: {exc}",
            )

    if cfg.parallelism == 1:
        return [safe(s, oid) for s, oid in zip(statements, ids)]
    with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
        futures = [pool.submit(safe, s, oid) for s, oid in zip(statements, ids)]
        return [f.result() for f in futures]


class OutcomeStore:
    """Append-only store of outcomes and the decisions recorded against them."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._outcomes: dict[str, PipelineOutcome] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._global = threading.Lock()
        if self.path and self.path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                rec = json.loads(raw)
                if rec.get("kind") == "outcome":
                    outcome = PipelineOutcome.from_record(rec["data"])
                    self._outcomes[outcome.id] = outcome
                elif rec.get("kind") == "decision":
                    decision = ReviewDecision.from_record(rec["data"])
                    target = self._outcomes.get(decision.outcome_id)
                    if target is not None:
                        target.decision = decision

    def _append(self, kind: str, data: dict) -> None:
        if not self.path:
            return
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"kind": kind, "data": data}, sort_keys=True) + "\n")

    def put(self, outcome: PipelineOutcome) -> None:
        with self._global:
            self._outcomes[outcome.id] = outcome
            self._append("outcome", outcome.to_record())

    def get(self, outcome_id: str) -> PipelineOutcome:
        try:
            return self._outcomes[outcome_id]
        except KeyError:
            raise UnknownOutcome(f"no outcome with id '{outcome_id}'") from None

    def __contains__(self, outcome_id: str) -> bool:
        return outcome_id in self._outcomes

    def __len__(self) -> int:
        return len(self._outcomes)

    def list_pending(self) -> list[PipelineOutcome]:
        """Pending review queue, newest first."""
        return [o for o in reversed(self._outcomes.values()) if o.is_pending()]

    def list_all(self) -> list[PipelineOutcome]:
        return list(self._outcomes.values())

    def decision_lock(self, outcome_id: str) -> threading.Lock:
        with self._global:
            return self._locks.setdefault(outcome_id, threading.Lock())

    def set_decision(self, outcome_id: str, decision: ReviewDecision) -> PipelineOutcome:
        outcome = self.get(outcome_id)
        outcome.decision = decision
        self._append("decision", decision.to_record())
        return outcome


def record_decision(decision: ReviewDecision, store: OutcomeStore,
                    catalogue: Catalogue | None) -> PipelineOutcome:
    """Apply one review decision; the first recorded decision is final.

    Approve publishes the outcome's final script to the catalogue; edit
    publishes the reviewer's script instead (after the syntax gate); reject
    closes the outcome and leaves the catalogue untouched.
    """
    lock = store.decision_lock(decision.outcome_id)
    with lock:
        outcome = store.get(decision.outcome_id)
        if outcome.decision is not None:
            raise AlreadyDecided(f"outcome '{outcome.id}' already has a decision")
        if outcome.status is not Status.NEEDS_REVIEW:
            raise InvalidInput(
                f"outcome '{outcome.id}' is {outcome.status.value}, not reviewable"
            )
        if decision.decision is Decision.EDIT:
            if not decision.edited_script or not decision.edited_script.strip():
                raise InvalidInput("edit decision requires an edited script")
            try:
                script = BashScript(decision.edited_script)
            except ValueError as exc:
                raise SyntaxRejected(str(exc)) from exc
            report = check_syntax(script)
            if not report.ok:
                raise SyntaxRejected("edited script failed the syntax check",
                                     report.findings)
            if catalogue is None:
                raise InvalidInput("no catalogue configured to receive the script")
            catalogue.upsert(catalogue.make_entry(
                outcome.statement, script, Provenance.EDITED, outcome.id))
        elif decision.decision is Decision.APPROVE:
            if catalogue is None:
                raise InvalidInput("no catalogue configured to receive the script")
            catalogue.upsert(catalogue.make_entry(
                outcome.statement, outcome.final_script, Provenance.APPROVED,
                outcome.id))
        return store.set_decision(decision.outcome_id, decision)
