"""Dataset loading, metric arithmetic with oracles, report determinism."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scriptsmith.catalogue import Catalogue
from scriptsmith.errors import DuplicateId, ParseError
from scriptsmith.evaluation import (
    Criteria,
    EvalRecord,
    Labels,
    compute_metrics,
    label_ok,
    load_dataset,
    load_eval_records,
    percent_display,
    run_eval,
)
from scriptsmith.generation import BashScript

from conftest import FIXTURES, make_cfg, replay_gateway, replay_statements


# -- loading --------------------------------------------------------------

def test_load_dataset_valid(tmp_path):
    path = tmp_path / "ds.jsonl"
    path.write_text(
        '{"id": "a", "task": "t1"}\n'
        '{"id": "b", "task": "t2", "labels": {"first_pass": 2}}\n'
        '{"id": "c", "task": "t3", "gold_script": "ls"}\n'
    )
    ts = load_dataset(path)
    assert len(ts) == 3
    assert ts.tasks[1].labels.first_pass == 2
    assert ts.tasks[2].gold_script == "ls"


def test_load_dataset_rejects_label_out_of_domain(tmp_path):
    path = tmp_path / "ds.jsonl"
    path.write_text('{"id": "a", "task": "t", "labels": {"first_pass": 3}}\n')
    with pytest.raises(ParseError) as exc:
        load_dataset(path)
    assert exc.value.line_no == 1


def test_load_dataset_rejects_bad_json_with_line(tmp_path):
    path = tmp_path / "ds.jsonl"
    path.write_text('{"id": "a", "task": "t"}\nnot json\n')
    with pytest.raises(ParseError) as exc:
        load_dataset(path)
    assert exc.value.line_no == 2


def test_load_dataset_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "ds.jsonl"
    path.write_text('{"id": "a", "task": "t1"}\n{"id": "a", "task": "t2"}\n')
    with pytest.raises(DuplicateId):
        load_dataset(path)


def test_load_dataset_intercode_scale():
    ts = load_dataset(FIXTURES / "tasks_153.jsonl")
    assert len(ts) == 153


# -- metric arithmetic -------------------------------------------------------

def _rec(fp=None, fb=None, rf=None, verdict=None) -> EvalRecord:
    labels = None
    if fp is not None or fb is not None or rf is not None:
        labels = Labels(first_pass=fp, feedback=fb, refined=rf)
    return EvalRecord(task_id="t", statement="s", labels=labels,
                      verdict_correct=verdict)


def test_first_pass_accuracy_direct_count():
    records = [_rec(fp=2)] * 4 + [_rec(fp=1)] * 3 + [_rec(fp=0)] * 3
    out = compute_metrics(records, Criteria.STRICT)
    assert out["metrics"]["first_pass_accuracy"] == pytest.approx(0.40)
    assert out["display_percent"]["first_pass_accuracy"] == 40
    counts = out["counts"]["first_pass"]
    assert counts["correct"] + counts["incorrect"] == counts["labeled"]


def test_unrefined_tasks_inherit_first_pass_label():
    records = [_rec(fp=2), _rec(fp=0, fb=2, rf=2), _rec(fp=0)]
    out = compute_metrics(records, Criteria.STRICT)["metrics"]
    assert out["post_refinement_accuracy"] == pytest.approx(2 / 3)
    assert out["refinement_lift"] == pytest.approx(1 / 3)


def test_metrics_omitted_without_labels():
    records = [_rec(verdict=True), _rec(verdict=False)]
    out = compute_metrics(records, Criteria.STRICT)
    assert out["metrics"] == {}
    assert set(out["omitted"]) == {
        "first_pass_accuracy", "post_refinement_accuracy", "refinement_lift",
        "assessment_alignment", "feedback_usefulness", "model_correction_rate"}


def test_alignment_counts_every_comparison():
    records = [_rec(fp=2, verdict=True), _rec(fp=0, verdict=True),
               _rec(fp=2, verdict=False), _rec(fp=1)]
    out = compute_metrics(records, Criteria.STRICT)
    assert out["metrics"]["assessment_alignment"] == pytest.approx(1 / 3)
    assert out["counts"]["alignment"]["compared"] == 3
    assert out["counts"]["alignment"]["dropped"] == 1


METRICS_FIXTURE = load_eval_records(FIXTURES / "metrics_153.jsonl")


def test_fixture_replays_study_arithmetic_strict():
    out = compute_metrics(METRICS_FIXTURE, Criteria.STRICT)
    metrics, display = out["metrics"], out["display_percent"]
    assert out["counts"]["feedback"]["first_pass_incorrect"] == 88
    assert out["counts"]["feedback"]["useful"] == 61
    assert metrics["feedback_usefulness"] == pytest.approx(61 / 88)
    assert display["feedback_usefulness"] == 69
    assert out["counts"]["correction"] == {"feedback_correct": 61, "corrected": 47}
    assert display["model_correction_rate"] == 77
    assert display["first_pass_accuracy"] == 42
    assert display["post_refinement_accuracy"] == 76


def test_fixture_strict_not_above_partial_on_every_metric():
    strict = compute_metrics(METRICS_FIXTURE, Criteria.STRICT)["metrics"]
    partial = compute_metrics(METRICS_FIXTURE, Criteria.PARTIAL)["metrics"]
    assert set(strict) == set(partial)
    for name, value in strict.items():
        assert value <= partial[name] + 1e-12, name


def test_metrics_permutation_invariant():
    shuffled = METRICS_FIXTURE.copy()
    random.Random(7).shuffle(shuffled)
    for criteria in Criteria:
        assert compute_metrics(shuffled, criteria) == \
            compute_metrics(METRICS_FIXTURE, criteria)


_label = st.sampled_from([0, 1, 2])


@given(labels=st.lists(_label, min_size=1, max_size=40))
def test_partial_accuracy_at_least_strict(labels):
    records = [_rec(fp=x) for x in labels]
    strict = compute_metrics(records, Criteria.STRICT)["metrics"]
    partial = compute_metrics(records, Criteria.PARTIAL)["metrics"]
    assert strict["first_pass_accuracy"] <= partial["first_pass_accuracy"]
    assert strict["post_refinement_accuracy"] <= partial["post_refinement_accuracy"]


@given(label=_label)
def test_label_ok_definitions(label):
    assert label_ok(label, Criteria.STRICT) == (label == 2)
    assert label_ok(label, Criteria.PARTIAL) == (label in (1, 2))


@pytest.mark.parametrize("rate,expected", [
    (0.0, 0), (1.0, 100), (0.764, 76), (0.765, 77), (0.695, 70),
    (61 / 88, 69), (47 / 61, 77), (0.425, 43), (0.4248, 42),
])
def test_percent_display_round_half_up(rate, expected):
    assert percent_display(rate) == expected


# -- run_eval ---------------------------------------------------------------

def _replay_taskset():
    return load_dataset(FIXTURES / "replay" / "dataset.jsonl", name="replay")


def test_run_eval_deterministic():
    ts = _replay_taskset()
    r1 = run_eval(ts, make_cfg(), replay_gateway())
    r2 = run_eval(ts, make_cfg(), replay_gateway())
    assert r1.to_json() == r2.to_json()


def test_run_eval_parallelism_invariant():
    ts = _replay_taskset()
    serial = run_eval(ts, make_cfg(parallelism=1), replay_gateway())
    parallel = run_eval(ts, make_cfg(parallelism=4), replay_gateway())
    assert serial.to_json() == parallel.to_json()


def test_run_eval_all_catalogue_hits_zero_llm_calls():
    ts = _replay_taskset()
    catalogue = Catalogue()
    for statement in replay_statements():
        catalogue.add(statement, BashScript("echo catalogued"), created_at="t")
    gw = replay_gateway()
    report = run_eval(ts, make_cfg(), gw, catalogue)
    assert gw.call_count() == 0
    assert all(r["source"] == "catalogue_hit" for r in report.records)


def test_run_eval_failed_records_kept_in_denominator(tmp_path):
    path = tmp_path / "ds.jsonl"
    path.write_text(
        '{"id": "x", "task": "task nobody scripted", "labels": {"first_pass": 2}}\n'
        '{"id": "t01", "task": "list all files in the current directory '
        'including hidden ones", "labels": {"first_pass": 2}}\n'
    )
    report = run_eval(load_dataset(path), make_cfg(), replay_gateway())
    strict = report.results["strict"]
    assert report.records[0]["status"] == "failed"
    assert strict["counts"]["alignment"]["compared"] == 2
    # the failed record counts as an incorrect verdict against its label
    assert strict["metrics"]["assessment_alignment"] == pytest.approx(0.5)


def test_report_table_shape():
    report = run_eval(_replay_taskset(), make_cfg(), replay_gateway())
    table = report.format_table()
    assert "dataset" in table and "generation" in table
    assert "strict" in table and "partial" in table
    assert "replay" in table


def test_report_json_has_no_timings():
    report = run_eval(_replay_taskset(), make_cfg(), replay_gateway())
    assert "timings" not in report.to_json()
