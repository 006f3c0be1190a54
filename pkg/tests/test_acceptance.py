"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest -sv tests/test_acceptance.py`` to see the per-criterion
lines; every tolerance is pinned here, not calibrated elsewhere.
"""

from __future__ import annotations

import itertools
import json
import subprocess
import sys

import numpy as np
import pytest

from scriptsmith.assessment import (
    AnalysisKind,
    AnalysisOutcome,
    AnalysisVerdict,
    ensemble_synthesis,
)
from scriptsmith.catalogue import ActionKey, Catalogue, Entity, match_score
from scriptsmith.config import CatalogueConfig, ScoreMode
from scriptsmith.errors import SyntaxRejected
from scriptsmith.evaluation import Criteria, compute_metrics, load_eval_records
from scriptsmith.generation import BashScript, ExtractionRule, extract_script
from scriptsmith.pipeline import (
    Decision,
    OutcomeStore,
    ReviewDecision,
    Source,
    Status,
    record_decision,
    run_action,
    run_batch,
)
from scriptsmith.syntax import FindingKind, SyntaxFinding, SyntaxReport, check_syntax

from conftest import (
    FIXTURES,
    gateway_from,
    make_cfg,
    replay_fixture_entries,
    replay_gateway,
    replay_statements,
)


def _passed(number: int, text: str) -> None:
    print(f"\nACCEPTANCE {number} PASS: {text}")


def test_criterion_1_ensemble_truth_table():
    """All 18 syntax x similarity x difference combinations follow the OR rule."""
    def syntax(ok: bool) -> SyntaxReport:
        findings = () if ok else (SyntaxFinding(1, FindingKind.UNCLOSED_QUOTE, "x"),)
        return SyntaxReport(ok, findings, "builtin-lex-v1")

    true_cases = 0
    for ok, sim, diff in itertools.product((True, False),
                                           AnalysisOutcome, AnalysisOutcome):
        verdict = ensemble_synthesis(
            syntax(ok),
            AnalysisVerdict(sim, "", AnalysisKind.SIMILARITY),
            AnalysisVerdict(diff, "", AnalysisKind.DIFFERENCE),
        )
        expected = (ok and sim is AnalysisOutcome.ALIGNED
                    and diff is AnalysisOutcome.ALIGNED)
        assert verdict.functionally_correct == expected, (ok, sim, diff)
        true_cases += verdict.functionally_correct
    assert true_cases == 1
    _passed(1, "ensemble truth table: 18 combinations, exactly one correct case")


def test_criterion_2_extraction_corpus():
    """>=12 fixtures across all four rules extract byte-exact and idempotently."""
    corpus = json.loads((FIXTURES / "extraction_corpus.json").read_text())
    assert len(corpus) >= 12
    rules_seen = set()
    for case in corpus:
        script, rule = extract_script(case["raw"])
        assert script.text == case["script"], case["name"]
        assert rule.value == case["rule"], case["name"]
        rules_seen.add(rule)
        again, _ = extract_script(script.text)
        assert again.text == script.text, f"{case['name']} not idempotent"
    assert rules_seen == set(ExtractionRule)
    _passed(2, f"extraction corpus: {len(corpus)} fixtures, all four rules, "
               "byte-exact and idempotent")


def test_criterion_3_syntax_corpus():
    """20-script corpus classified with zero false positives/negatives."""
    corpus = json.loads((FIXTURES / "syntax_corpus.json").read_text())
    assert len(corpus) == 20
    for case in corpus:
        report = check_syntax(case["script"])
        assert report.ok == case["ok"], case["name"]
        if not case["ok"]:
            assert any(f.kind.value == case["kind"] for f in report.findings), \
                case["name"]

    import shutil
    bash = shutil.which("bash")
    agreement = "external checker unavailable, skipped"
    if bash:
        import tempfile
        from pathlib import Path

        agree = 0
        for case in corpus:
            with tempfile.NamedTemporaryFile("w", suffix=".sh",
                                             delete=False) as fh:
                fh.write(case["script"])
                path = fh.name
            rc = subprocess.run([bash, "-n", path], capture_output=True).returncode
            Path(path).unlink()
            agree += (rc == 0) == case["ok"]
        assert agree == 20
        agreement = "bash -n agreement 20/20"
    _passed(3, f"syntax corpus: 20/20 verdicts exact; {agreement}")


def _scoring_catalogue() -> Catalogue:
    cat = Catalogue(CatalogueConfig())
    raw = json.loads((FIXTURES / "scoring_catalogue.json").read_text())
    for rec in raw:
        cat.add(rec["statement"], BashScript(rec["script"]),
                created_at="2026-01-01T00:00:00+00:00")
    return cat


def _oracle_score(a: ActionKey, b: ActionKey, alpha: float, mode: ScoreMode) -> float:
    # independent scalar recomputation: plain python floats, no numpy
    cos = max(-1.0, min(1.0, sum(float(x) * float(y)
                                 for x, y in zip(a.embedding, b.embedding))))
    if mode is ScoreMode.VERBATIM:
        ent = 0.0
        for ea, eb in zip(a.entities, b.entities):
            if (ea.name == eb.name and ea.value is not None
                    and eb.value is not None and max(ea.value, eb.value) > 0):
                ent += abs(ea.value - eb.value) / max(ea.value, eb.value)
    else:
        firsts_a: dict = {}
        firsts_b: dict = {}
        for e in a.entities:
            firsts_a.setdefault(e.name, e.value)
        for e in b.entities:
            firsts_b.setdefault(e.name, e.value)
        union = set(firsts_a) | set(firsts_b)
        if not union:
            ent = 1.0
        else:
            ent = 0.0
            for name in union:
                if name in firsts_a and name in firsts_b:
                    x, y = firsts_a[name], firsts_b[name]
                    if x is None or y is None:
                        ent += 1.0
                    else:
                        ent += max(0.0, 1.0 - abs(x - y) / max(abs(x), abs(y), 1e-12))
            ent /= len(union)
    return (1.0 - alpha) * cos + alpha * ent


def test_criterion_4_scoring_oracle_and_retrieval():
    """Both score modes match an independent recomputation; top-k equals scan."""
    cat = _scoring_catalogue()
    assert len(cat) == 20
    queries = ["Print the process ids of top 5 CPU consumers",
               "kill top 4 memory hogs", "check disk usage",
               "show me open ports now"]
    for query in queries:
        qkey = ActionKey.build(query)
        for entry in cat.entries():
            for mode in ScoreMode:
                got = match_score(qkey, entry.key, 0.5, mode).total
                assert abs(got - _oracle_score(qkey, entry.key, 0.5, mode)) <= 1e-9

    self_key = ActionKey.build("Print the process ids of top 5 CPU consumers")
    assert abs(match_score(self_key, self_key, 0.5, ScoreMode.CORRECTED).total
               - 1.0) <= 1e-9
    # the literal formula zeroes the entity term on identical values: 1 - alpha
    assert abs(match_score(self_key, self_key, 0.5, ScoreMode.VERBATIM).total
               - 0.5) <= 1e-9

    for query in queries:
        qkey = ActionKey.build(query)
        exhaustive = sorted(
            ((match_score(qkey, e.key, 0.5, ScoreMode.CORRECTED).total, e.id)
             for e in cat.entries()),
            key=lambda t: (-t[0], t[1]),
        )
        for k in (1, 5, 20):
            got = [(s.total, e.id) for e, s in cat.retrieve(query, k).hits]
            assert got == exhaustive[:k]
    _passed(4, "scoring oracle: both modes within 1e-9; corrected self=1.0, "
               "verbatim self=0.5; retrieval equals exhaustive scan")


def test_criterion_5_worked_score():
    """cos=0.9 with shared entity 5 vs 4 at alpha=0.5 scores 0.8500 +- 1e-9."""
    dim = 256
    va = np.zeros(dim)
    va[0] = 1.0
    vb = np.zeros(dim)
    vb[0], vb[1] = 0.9, np.sqrt(1.0 - 0.81)
    a = ActionKey("qa", "qa", va, (Entity("cpu consumer", 5.0),))
    b = ActionKey("qb", "qb", vb, (Entity("cpu consumer", 4.0),))
    score = match_score(a, b, 0.5, ScoreMode.CORRECTED)
    assert abs(score.total - 0.85) <= 1e-9
    _passed(5, f"worked score: 0.5*0.9 + 0.5*0.8 = {score.total:.10f}")


def test_criterion_6_refinement_gating_and_call_accounting():
    """10-task batch with 4 flagged: exactly 4 explains, 4 regenerates,
    6 byte-unchanged scripts, rounds within the single-round default."""
    gw = gateway_from(replay_fixture_entries(), spy=True)
    outcomes = run_batch(replay_statements(), make_cfg(), gw)
    backend = gw.backends["default"]

    assert backend.template_calls["refine.explain"] == 4
    assert backend.template_calls["refine.regenerate"] == 4
    assert backend.template_calls["gen.initial"] == 10

    flagged = [o for o in outcomes
               if not o.rounds[0].verdict.functionally_correct]
    clean = [o for o in outcomes if o.rounds[0].verdict.functionally_correct]
    assert len(flagged) == 4 and len(clean) == 6
    for outcome in clean:
        assert outcome.final_script == outcome.rounds[0].script  # byte-unchanged
        assert outcome.llm_calls["refiner"] == 0
    for outcome in flagged:
        refine_rounds = len(outcome.rounds) - 1
        assert refine_rounds <= 1  # rounds_used within max_refine_rounds=1
        assert outcome.llm_calls["refiner"] == 2
    _passed(6, "refinement gating: 4 explains + 4 regenerates for 4 flagged; "
               "6 correct scripts byte-unchanged")


def _run_cli_report(out_path, parallelism: int | None = None) -> bytes:
    cmd = [sys.executable, "-m", "scriptsmith.cli",
           "--config", str(FIXTURES / "replay" / "config.yaml"),
           "run", "--dataset", str(FIXTURES / "replay" / "dataset.jsonl"),
           "--out", str(out_path)]
    if parallelism:
        cmd += ["--parallelism", str(parallelism)]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    return out_path.read_bytes()


def test_criterion_7_run_determinism(tmp_path):
    """The run subcommand is byte-deterministic, including across parallelism."""
    first = _run_cli_report(tmp_path / "r1.json")
    second = _run_cli_report(tmp_path / "r2.json")
    parallel = _run_cli_report(tmp_path / "r4.json", parallelism=4)
    assert first == second
    assert first == parallel
    _passed(7, "replay run: byte-identical reports across runs and parallelism 1 vs 4")


def test_criterion_8_metric_replay():
    """153 records: usefulness 61/88 -> 69%, correction 77%, strict <= partial."""
    records = load_eval_records(FIXTURES / "metrics_153.jsonl")
    assert len(records) == 153
    strict = compute_metrics(records, Criteria.STRICT)
    partial = compute_metrics(records, Criteria.PARTIAL)

    assert strict["counts"]["feedback"]["first_pass_incorrect"] == 88
    assert strict["counts"]["feedback"]["useful"] == 61
    assert strict["metrics"]["feedback_usefulness"] == pytest.approx(61 / 88)
    assert strict["display_percent"]["feedback_usefulness"] == 69

    assert strict["counts"]["correction"]["feedback_correct"] == 61
    assert strict["counts"]["correction"]["corrected"] == 47
    assert strict["display_percent"]["model_correction_rate"] == 77

    for name, value in strict["metrics"].items():
        assert value <= partial["metrics"][name] + 1e-12, name
    _passed(8, "metric replay: 61/88 = 69% usefulness, 47/61 = 77% correction, "
               "strict <= partial on every metric")


def test_criterion_9_catalogue_loop(tmp_path):
    """Approve/reject/edit drive the store exactly; the file round-trips."""
    cfg = make_cfg()
    store = OutcomeStore()
    catalogue = Catalogue(CatalogueConfig())
    statement = "list all files in the current directory including hidden ones"

    approved = run_action(statement, cfg, replay_gateway())
    store.put(approved)
    record_decision(ReviewDecision(approved.id, Decision.APPROVE, reviewer="sre"),
                    store, catalogue)
    result = catalogue.retrieve(statement, 1)
    assert abs(result.hits[0][1].total - 1.0) <= 1e-9
    assert result.high_confidence  # threshold 0.95

    rejected = run_action("print the process ids of the top 5 cpu consumers",
                          cfg, replay_gateway())
    store.put(rejected)
    size_before = len(catalogue)
    record_decision(ReviewDecision(rejected.id, Decision.REJECT, reviewer="sre"),
                    store, catalogue)
    assert len(catalogue) == size_before

    edited = run_action("display the kernel version", cfg, replay_gateway())
    store.put(edited)
    with pytest.raises(SyntaxRejected) as exc:
        record_decision(
            ReviewDecision(edited.id, Decision.EDIT, reviewer="sre",
                           edited_script='echo "broken\n'),
            store, catalogue)
    assert exc.value.findings
    assert len(catalogue) == size_before

    path1, path2 = tmp_path / "cat1.jsonl", tmp_path / "cat2.jsonl"
    catalogue.save(path1)
    reloaded = Catalogue.load(path1)
    reloaded.save(path2)
    assert path1.read_bytes() == path2.read_bytes()
    hits_before = [(e.id, s.to_record()) for e, s in
                   catalogue.retrieve(statement, 5).hits]
    hits_after = [(e.id, s.to_record()) for e, s in
                  reloaded.retrieve(statement, 5).hits]
    assert hits_before == hits_after
    _passed(9, "catalogue loop: approve retrievable at 1.0 high-confidence, "
               "reject leaves store, broken edit rejected, file round-trips")


def test_criterion_10_guardrail_no_error_found():
    """A NO ERROR FOUND explanation keeps the script and marks no-change."""
    task = "rotate the application logs"
    gw = gateway_from([
        {"template_id": "gen.initial", "prompt": task,
         "response": "```bash\nlogrotate /etc/logrotate.conf\n```"},
        {"template_id": "assess.functionality", "prompt": "logrotate",
         "response": "runs logrotate over the main configuration"},
        {"template_id": "assess.similarity", "prompt": task,
         "response": "VERDICT: DEVIATES"},
        {"template_id": "assess.difference", "prompt": task,
         "response": "VERDICT: ALIGNED"},
        {"template_id": "refine.explain", "prompt": task,
         "response": "NO ERROR FOUND"},
    ], spy=True)
    outcome = run_action(task, make_cfg(), gw)
    assert outcome.source is Source.GENERATED
    assert outcome.status is Status.NEEDS_REVIEW
    assert outcome.final_script.text == "logrotate /etc/logrotate.conf\n"
    assert outcome.final_script == outcome.rounds[0].script  # untouched
    assert outcome.rounds[-1].note == "guardrail-no-error"
    backend = gw.backends["default"]
    assert backend.template_calls["refine.explain"] == 1
    assert backend.template_calls["refine.regenerate"] == 0
    _passed(10, "guardrail: NO ERROR FOUND leaves the script untouched and "
                "marks the outcome no-change")
