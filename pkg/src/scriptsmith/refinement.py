"""Feedback-driven script refinement with anti-self-doubt guardrails.

Refinement only ever runs on scripts flagged incorrect: the refiner first
explains the failure, then regenerates the script with that explanation as
feedback.  Two guardrails stop the model from "fixing" a good script: the
explain prompt allows an explicit NO ERROR FOUND answer, and a regeneration
that returns the original byte-for-byte short-circuits the loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .assessment import AssessmentVerdict, assess
from .config import PipelineConfig
from .errors import GuardrailNoError, InvalidInput
from .gateway import PromptRequest
from .generation import BashScript, extract_script

NO_ERROR_MARKER = "NO ERROR FOUND"


class FeedbackSource(str, Enum):
    MODEL = "model"
    HUMAN = "human"


@dataclass(frozen=True)
class Feedback:
    explanation: str
    source: FeedbackSource = FeedbackSource.MODEL
    round: int = 1

    def __post_init__(self):
        if self.source is FeedbackSource.MODEL and not self.explanation.strip():
            raise InvalidInput("model feedback must carry a non-empty explanation")
        if self.round < 1:
            raise InvalidInput("feedback round numbering starts at 1")


@dataclass(frozen=True)
class RoundTrace:
    round: int
    feedback: Feedback | None
    script: BashScript
    verdict: AssessmentVerdict | None
    note: str = ""


@dataclass(frozen=True)
class RefinementOutcome:
    original: BashScript
    refined: BashScript
    feedback: Feedback | None
    changed: bool
    rounds_used: int
    trace: tuple[RoundTrace, ...] = ()


def _verdict_summary(verdict: AssessmentVerdict) -> str:
    parts = []
    if not verdict.syntax.ok:
        for f in verdict.syntax.findings:
            parts.append(f"syntax, line {f.line}: {f.detail}")
    for analysis in (verdict.similarity, verdict.difference):
        parts.append(f"{analysis.kind.value} analysis: {analysis.outcome.value}"
                     + (f" ({analysis.rationale})" if analysis.rationale else ""))
    return "\n".join(parts)


def explain_failure(gateway, task: str, script: BashScript,
                    verdict: AssessmentVerdict, cfg: PipelineConfig) -> Feedback:
    """Ask the refiner why the flagged script fails its task.

    Raises GuardrailNoError when the model answers NO ERROR FOUND instead of
    inventing a defect.
    """
    if verdict.functionally_correct:
        raise InvalidInput("refinement is only applied to scripts flagged incorrect")
    req = PromptRequest(
        "refine.explain",
        {"task": task, "script": script.text, "findings": _verdict_summary(verdict)},
        cfg.max_tokens, cfg.temperature,
    )
    text = gateway.complete(req, cfg.roles.refiner).text
    if text.strip().upper().startswith(NO_ERROR_MARKER):
        raise GuardrailNoError("refiner found no genuine defect")
    return Feedback(explanation=text.strip())


def refine(gateway, task: str, script: BashScript, feedback: Feedback,
           cfg: PipelineConfig) -> RefinementOutcome:
    """Regenerate the script using the feedback; detect no-change byte-exactly.

    Feedback text is truncated to the configured character budget before it
    enters the prompt; long-winded feedback measurably hurts regeneration.
    """
    if not feedback.explanation.strip():
        raise InvalidInput("cannot refine with empty feedback")
    explanation = feedback.explanation[:cfg.feedback_char_budget]
    req = PromptRequest(
        "refine.regenerate",
        {"task": task, "script": script.text, "feedback": explanation},
        cfg.max_tokens, cfg.temperature,
    )
    raw = gateway.complete(req, cfg.roles.refiner).text
    refined, _rule = extract_script(raw)
    changed = refined.text != script.text
    return RefinementOutcome(
        original=script,
        refined=refined if changed else script,
        feedback=feedback,
        changed=changed,
        rounds_used=1,
        trace=(RoundTrace(1, feedback, refined if changed else script, None,
                          "" if changed else "no-change"),),
    )


def refine_loop(gateway, task: str, script: BashScript, verdict: AssessmentVerdict,
                cfg: PipelineConfig) -> RefinementOutcome:
    """Run explain -> refine for up to ``cfg.max_refine_rounds`` rounds.

    With ``reassess_after_refine`` the loop re-assesses each refined script
    and stops early once one passes.  A guardrail answer or an unchanged
    regeneration also ends the loop, keeping the original script.
    """
    if verdict.functionally_correct:
        raise InvalidInput("refinement is only applied to scripts flagged incorrect")
    current = script
    current_verdict = verdict
    trace: list[RoundTrace] = []
    last_feedback: Feedback | None = None
    changed_any = False
    rounds_used = 0

    for round_no in range(1, cfg.max_refine_rounds + 1):
        rounds_used = round_no
        try:
            feedback = explain_failure(gateway, task, current, current_verdict, cfg)
        except GuardrailNoError:
            trace.append(RoundTrace(round_no, None, current, None, "guardrail-no-error"))
            break
        feedback = Feedback(feedback.explanation, feedback.source, round_no)
        last_feedback = feedback
        step = refine(gateway, task, current, feedback, cfg)
        if not step.changed:
            trace.append(RoundTrace(round_no, feedback, current, None, "no-change"))
            break
        changed_any = True
        current = step.refined
        new_verdict: AssessmentVerdict | None = None
        if cfg.reassess_after_refine:
            new_verdict = assess(gateway, current, task, cfg)
        trace.append(RoundTrace(round_no, feedback, current, new_verdict))
        if new_verdict is not None:
            if new_verdict.functionally_correct:
                break
            current_verdict = new_verdict

    return RefinementOutcome(
        original=script,
        refined=current,
        feedback=last_feedback,
        changed=changed_any,
        rounds_used=rounds_used,
        trace=tuple(trace),
    )
