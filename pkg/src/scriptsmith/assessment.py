"""Execution-free correctness judgment of a script against its task.

A script passes only when the syntax check, the similarity analysis, and the
difference analysis all agree it matches the task; any indicated deviation
marks it functionally incorrect.  A syntax failure gates the model analyses
entirely, so broken scripts cost zero LLM calls.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .config import PipelineConfig
from .errors import InvalidInput
from .gateway import PromptRequest
from .generation import BashScript
from .syntax import SyntaxReport, check_syntax


class AnalysisOutcome(str, Enum):
    ALIGNED = "aligned"
    DEVIATES = "deviates"
    INDETERMINATE = "indeterminate"


class AnalysisKind(str, Enum):
    SIMILARITY = "similarity"
    DIFFERENCE = "difference"


@dataclass(frozen=True)
class AnalysisVerdict:
    outcome: AnalysisOutcome
    rationale: str
    kind: AnalysisKind

    def to_record(self) -> dict:
        return {"outcome": self.outcome.value, "rationale": self.rationale,
                "kind": self.kind.value}

    @classmethod
    def from_record(cls, rec: dict) -> "AnalysisVerdict":
        return cls(AnalysisOutcome(rec["outcome"]), str(rec.get("rationale", "")),
                   AnalysisKind(rec["kind"]))


@dataclass(frozen=True)
class AssessmentVerdict:
    functionally_correct: bool
    syntax: SyntaxReport
    functionality: str
    similarity: AnalysisVerdict
    difference: AnalysisVerdict

    def to_record(self) -> dict:
        return {
            "functionally_correct": self.functionally_correct,
            "syntax": self.syntax.to_record(),
            "functionality": self.functionality,
            "similarity": self.similarity.to_record(),
            "difference": self.difference.to_record(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "AssessmentVerdict":
        return cls(
            functionally_correct=bool(rec["functionally_correct"]),
            syntax=SyntaxReport.from_record(rec["syntax"]),
            functionality=str(rec.get("functionality", "")),
            similarity=AnalysisVerdict.from_record(rec["similarity"]),
            difference=AnalysisVerdict.from_record(rec["difference"]),
        )


_VERDICT_RE = re.compile(r"verdict\s*:\s*(aligned|deviates)\b", re.IGNORECASE)


def parse_analysis_outcome(text: str) -> AnalysisOutcome:
    """Read the last 'VERDICT: ALIGNED|DEVIATES' line, case-insensitively.

    An absent or unparseable marker yields INDETERMINATE; it counts as a
    deviation downstream but stays distinguishable from a genuine one.
    """
    for line in reversed(text.splitlines()):
        m = _VERDICT_RE.search(line)
        if m:
            return AnalysisOutcome(m.group(1).lower())
    return AnalysisOutcome.INDETERMINATE


def summarize_functionality(gateway, script: BashScript, cfg: PipelineConfig) -> str:
    """Ask the assessor to describe what the script does, in plain language.

    Callers must only pass syntactically valid scripts; a summary of broken
    code would describe behaviour the script cannot have.
    """
    if script.is_empty():
        raise InvalidInput("cannot summarize an empty script")
    req = PromptRequest("assess.functionality", {"script": script.text},
                        cfg.max_tokens, cfg.temperature)
    return gateway.complete(req, cfg.roles.assessor).text


def _analysis(gateway, template_id: str, kind: AnalysisKind, functionality: str,
              task: str, cfg: PipelineConfig) -> AnalysisVerdict:
    if not functionality.strip() or not task.strip():
        raise InvalidInput("analysis needs a non-empty task and functionality")
    req = PromptRequest(template_id, {"task": task, "functionality": functionality},
                        cfg.max_tokens, cfg.temperature)
    text = gateway.complete(req, cfg.roles.assessor).text
    return AnalysisVerdict(parse_analysis_outcome(text), text, kind)


def similarity_analysis(gateway, functionality: str, task: str,
                        cfg: PipelineConfig) -> AnalysisVerdict:
    return _analysis(gateway, "assess.similarity", AnalysisKind.SIMILARITY,
                     functionality, task, cfg)


def difference_analysis(gateway, functionality: str, task: str,
                        cfg: PipelineConfig) -> AnalysisVerdict:
    return _analysis(gateway, "assess.difference", AnalysisKind.DIFFERENCE,
                     functionality, task, cfg)


def ensemble_synthesis(syntax: SyntaxReport, similarity: AnalysisVerdict,
                       difference: AnalysisVerdict,
                       functionality: str = "") -> AssessmentVerdict:
    """Combine the three signals: any deviation means functionally incorrect.

    Correct requires syntax ok AND both analyses ALIGNED; INDETERMINATE is
    treated as a deviation (conservative) but preserved in the record.
    """
    correct = (syntax.ok
               and similarity.outcome is AnalysisOutcome.ALIGNED
               and difference.outcome is AnalysisOutcome.ALIGNED)
    return AssessmentVerdict(
        functionally_correct=correct,
        syntax=syntax,
        functionality=functionality,
        similarity=similarity,
        difference=difference,
    )


def assess(gateway, script: BashScript, task: str, cfg: PipelineConfig) -> AssessmentVerdict:
    """Full execution-free assessment of one script against one task.

    Syntax is checked first; on failure the model analyses are skipped and
    both are recorded INDETERMINATE with a "syntax gate" rationale.
    """
    syntax = check_syntax(script, cfg.syntax_checker_cmd)
    if not syntax.ok:
        gate = "syntax gate"
        return ensemble_synthesis(
            syntax,
            AnalysisVerdict(AnalysisOutcome.INDETERMINATE, gate, AnalysisKind.SIMILARITY),
            AnalysisVerdict(AnalysisOutcome.INDETERMINATE, gate, AnalysisKind.DIFFERENCE),
        )
    functionality = summarize_functionality(gateway, script, cfg)
    similarity = similarity_analysis(gateway, functionality, task, cfg)
    difference = difference_analysis(gateway, functionality, task, cfg)
    return ensemble_synthesis(syntax, similarity, difference, functionality)
