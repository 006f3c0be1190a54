"""Labeled-dataset evaluation: run the pipeline and score it two ways.

Expert labels use the 0/1/2 scale; metrics are computed under a strict
criterion (only 2 counts as correct) and a partial one (1 or 2 count).
Label-derived metrics are omitted, never zeroed, when the labels they need
are absent; every drop is counted and reported.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .catalogue import Catalogue
from .config import PipelineConfig
from .errors import DuplicateId, ParseError
from .pipeline import PipelineOutcome, Source, Status, run_batch

METRIC_NAMES = (
    "first_pass_accuracy",
    "post_refinement_accuracy",
    "refinement_lift",
    "assessment_alignment",
    "feedback_usefulness",
    "model_correction_rate",
)


class Criteria(str, Enum):
    STRICT = "strict"
    PARTIAL = "partial"


def label_ok(label: int, criteria: Criteria) -> bool:
    return label == 2 if criteria is Criteria.STRICT else label >= 1


def percent_display(rate: float) -> int:
    """Round-half-up integer percent for report display; rates are in [0, 1]."""
    return int(math.floor(rate * 100.0 + 0.5))


@dataclass(frozen=True)
class Labels:
    first_pass: int | None = None
    feedback: int | None = None
    refined: int | None = None

    def to_record(self) -> dict:
        return {"first_pass": self.first_pass, "feedback": self.feedback,
                "refined": self.refined}


def _parse_label(value, field_name: str, line_no: int) -> int | None:
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool) or value not in (0, 1, 2):
        raise ParseError(line_no, f"label '{field_name}' must be 0, 1, or 2; got {value!r}")
    return value


@dataclass(frozen=True)
class TaskItem:
    id: str
    task: str
    gold_script: str | None = None
    labels: Labels | None = None


@dataclass(frozen=True)
class TaskSet:
    name: str
    tasks: tuple[TaskItem, ...]

    def __len__(self) -> int:
        return len(self.tasks)


def load_dataset(path: str | Path, name: str | None = None) -> TaskSet:
    """Parse a newline-delimited JSON task file into a TaskSet."""
    path = Path(path)
    tasks: list[TaskItem] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(rec, dict) or "id" not in rec or "task" not in rec:
                raise ParseError(line_no, "record needs 'id' and 'task' fields")
            task_id = str(rec["id"])
            if task_id in seen:
                raise DuplicateId(f"duplicate task id '{task_id}' at line {line_no}")
            seen.add(task_id)
            labels = None
            if rec.get("labels") is not None:
                lab = rec["labels"]
                if not isinstance(lab, dict):
                    raise ParseError(line_no, "'labels' must be a mapping")
                labels = Labels(
                    first_pass=_parse_label(lab.get("first_pass"), "first_pass", line_no),
                    feedback=_parse_label(lab.get("feedback"), "feedback", line_no),
                    refined=_parse_label(lab.get("refined"), "refined", line_no),
                )
            tasks.append(TaskItem(id=task_id, task=str(rec["task"]),
                                  gold_script=rec.get("gold_script"), labels=labels))
    return TaskSet(name=name or path.stem, tasks=tuple(tasks))


@dataclass(frozen=True)
class EvalRecord:
    """One task joined with its run outcome (if any) and its labels (if any)."""

    task_id: str
    statement: str
    labels: Labels | None = None
    verdict_correct: bool | None = None
    status: str = ""
    source: str = ""
    outcome: dict | None = None

    def to_record(self) -> dict:
        return {
            "task_id": self.task_id,
            "statement": self.statement,
            "labels": self.labels.to_record() if self.labels else None,
            "verdict_correct": self.verdict_correct,
            "status": self.status,
            "source": self.source,
            "outcome": self.outcome,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EvalRecord":
        labels = None
        if rec.get("labels"):
            lab = rec["labels"]
            labels = Labels(lab.get("first_pass"), lab.get("feedback"), lab.get("refined"))
        return cls(
            task_id=str(rec["task_id"]),
            statement=str(rec.get("statement", "")),
            labels=labels,
            verdict_correct=rec.get("verdict_correct"),
            status=str(rec.get("status", "")),
            source=str(rec.get("source", "")),
            outcome=rec.get("outcome"),
        )


def load_eval_records(path: str | Path) -> list[EvalRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if raw:
                records.append(EvalRecord.from_record(json.loads(raw)))
    return records


def _record_from_outcome(item: TaskItem, outcome: PipelineOutcome) -> EvalRecord:
    if outcome.status is Status.FAILED:
        verdict_correct: bool | None = False  # conservative: failures count incorrect
    elif outcome.source is Source.CATALOGUE_HIT:
        verdict_correct = True  # the catalogue only holds reviewed scripts
    elif outcome.rounds and outcome.rounds[0].verdict is not None:
        verdict_correct = outcome.rounds[0].verdict.functionally_correct
    else:
        verdict_correct = None
    return EvalRecord(
        task_id=item.id,
        statement=item.task,
        labels=item.labels,
        verdict_correct=verdict_correct,
        status=outcome.status.value,
        source=outcome.source.value,
        outcome=outcome.to_record(include_timings=False),
    )


def compute_metrics(records: list[EvalRecord], criteria: Criteria) -> dict:
    """Aggregate the metric suite under one labeling criterion.

    Tasks that were never refined inherit their first-pass label for the
    post-refinement accuracy.  Results are permutation-invariant: everything
    is a count over the record set.
    """
    labeled = [r for r in records
               if r.labels is not None and r.labels.first_pass is not None]
    n = len(labeled)
    metrics: dict[str, float] = {}
    omitted: list[str] = []
    counts: dict[str, dict] = {"total_records": len(records)}

    if n:
        fp_ok = sum(label_ok(r.labels.first_pass, criteria) for r in labeled)
        metrics["first_pass_accuracy"] = fp_ok / n
        counts["first_pass"] = {"labeled": n, "dropped": len(records) - n,
                                "correct": fp_ok, "incorrect": n - fp_ok}

        post_ok = 0
        for r in labeled:
            post_label = (r.labels.refined if r.labels.refined is not None
                          else r.labels.first_pass)
            post_ok += label_ok(post_label, criteria)
        metrics["post_refinement_accuracy"] = post_ok / n
        metrics["refinement_lift"] = (post_ok - fp_ok) / n
        counts["post_refinement"] = {"labeled": n, "dropped": len(records) - n,
                                     "correct": post_ok, "incorrect": n - post_ok}
    else:
        omitted += ["first_pass_accuracy", "post_refinement_accuracy", "refinement_lift"]

    compared = [r for r in labeled if r.verdict_correct is not None]
    if compared:
        agree = sum(r.verdict_correct == label_ok(r.labels.first_pass, criteria)
                    for r in compared)
        metrics["assessment_alignment"] = agree / len(compared)
        counts["alignment"] = {"compared": len(compared),
                               "dropped": len(records) - len(compared),
                               "agree": agree, "disagree": len(compared) - agree}
    else:
        omitted.append("assessment_alignment")

    has_feedback = any(r.labels.feedback is not None for r in labeled)
    incorrect_fp = [r for r in labeled if not label_ok(r.labels.first_pass, criteria)]
    if has_feedback and incorrect_fp:
        useful = sum(r.labels.feedback is not None
                     and label_ok(r.labels.feedback, criteria)
                     for r in incorrect_fp)
        metrics["feedback_usefulness"] = useful / len(incorrect_fp)
        counts["feedback"] = {"first_pass_incorrect": len(incorrect_fp),
                              "useful": useful}
    else:
        omitted.append("feedback_usefulness")

    feedback_ok = [r for r in labeled
                   if r.labels.feedback is not None
                   and label_ok(r.labels.feedback, criteria)]
    if feedback_ok:
        corrected = sum(r.labels.refined is not None
                        and label_ok(r.labels.refined, criteria)
                        for r in feedback_ok)
        metrics["model_correction_rate"] = corrected / len(feedback_ok)
        counts["correction"] = {"feedback_correct": len(feedback_ok),
                                "corrected": corrected}
    else:
        omitted.append("model_correction_rate")

    return {
        "criteria": criteria.value,
        "metrics": metrics,
        "display_percent": {k: percent_display(v) for k, v in metrics.items()},
        "counts": counts,
        "omitted": omitted,
    }


@dataclass
class EvalReport:
    dataset_name: str
    dataset_size: int
    config: dict
    records: list[dict]
    results: dict = field(default_factory=dict)  # criteria -> compute_metrics output

    def to_json(self) -> str:
        payload = {
            "dataset": self.dataset_name,
            "size": self.dataset_size,
            "config": self.config,
            "results": self.results,
            "records": self.records,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def format_table(self) -> str:
        """Plain-text results table: dataset x config x stage accuracies."""
        header = (f"{'dataset':<18} {'config':<16} {'criteria':<9} "
                  f"{'generation':>10} {'assessment':>10} {'refinement':>10}")
        lines = [header, "-" * len(header)]
        cfg_name = str(self.config.get("preset", "custom"))
        for criteria in (Criteria.STRICT, Criteria.PARTIAL):
            res = self.results.get(criteria.value, {})
            display = res.get("display_percent", {})

            def cell(name: str) -> str:
                return f"{display[name]}%" if name in display else "-"

            lines.append(
                f"{self.dataset_name:<18} {cfg_name:<16} {criteria.value:<9} "
                f"{cell('first_pass_accuracy'):>10} "
                f"{cell('assessment_alignment'):>10} "
                f"{cell('post_refinement_accuracy'):>10}"
            )
        return "\n".join(lines) + "\n"


def run_eval(taskset: TaskSet, cfg: PipelineConfig, gateway,
             catalogue: Catalogue | None = None) -> EvalReport:
    """Run the pipeline over a task set and aggregate both criteria.

    Failed outcomes stay in the record list and in every denominator they
    qualify for.  With a scripted backend the whole report is deterministic,
    including under parallel execution.
    """
    outcomes = run_batch([t.task for t in taskset.tasks], cfg, gateway,
                         catalogue, id_prefix="e")
    records = [_record_from_outcome(item, outcome)
               for item, outcome in zip(taskset.tasks, outcomes)]
    results = {
        criteria.value: compute_metrics(records, criteria)
        for criteria in (Criteria.STRICT, Criteria.PARTIAL)
    }
    return EvalReport(
        dataset_name=taskset.name,
        dataset_size=len(taskset),
        config=cfg.snapshot(),
        records=[r.to_record() for r in records],
        results=results,
    )
