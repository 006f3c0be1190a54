#!/usr/bin/env python3
"""End-to-end walkthrough on the scripted replay fixture.

Runs the full loop offline: batch generation with assessment and
refinement, a review pass that approves every pending outcome, and a second
batch demonstrating catalogue hits that skip the LLM entirely.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from scriptsmith.catalogue import Catalogue  # noqa: E402
from scriptsmith.config import load_config  # noqa: E402
from scriptsmith.evaluation import load_dataset, run_eval  # noqa: E402
from scriptsmith.gateway import LlmGateway  # noqa: E402
from scriptsmith.pipeline import (  # noqa: E402
    Decision,
    OutcomeStore,
    ReviewDecision,
    record_decision,
    run_batch,
)

REPLAY = ROOT / "tests" / "fixtures" / "replay"


def main() -> int:
    app_cfg = load_config(REPLAY / "config.yaml")
    gateway = LlmGateway.from_specs(app_cfg.backends, app_cfg.templates)
    taskset = load_dataset(REPLAY / "dataset.jsonl", name="replay")
    statements = [t.task for t in taskset.tasks]

    print("== first pass: generate, assess, refine ==")
    outcomes = run_batch(statements, app_cfg.pipeline, gateway)
    for outcome in outcomes:
        refined = len(outcome.rounds) > 1
        print(f"  {outcome.id}  {outcome.status.value:<13} "
              f"{'refined' if refined else 'first-pass':<10} {outcome.statement[:48]}")

    print("\n== review: approve every pending script ==")
    store = OutcomeStore()
    catalogue = Catalogue(app_cfg.catalogue)
    for outcome in outcomes:
        store.put(outcome)
        if outcome.is_pending():
            record_decision(
                ReviewDecision(outcome.id, Decision.APPROVE, reviewer="demo"),
                store, catalogue)
    print(f"  catalogue now holds {len(catalogue)} reviewed scripts")

    print("\n== second pass: every action is a catalogue hit ==")
    calls_before = gateway.call_count()
    rerun = run_batch(statements, app_cfg.pipeline, gateway, catalogue)
    hits = sum(o.source.value == "catalogue_hit" for o in rerun)
    print(f"  {hits}/{len(rerun)} catalogue hits, "
          f"{gateway.call_count() - calls_before} LLM calls")

    print("\n== evaluation report ==")
    report = run_eval(taskset, app_cfg.pipeline, gateway)
    print(report.format_table())
    strict = report.results["strict"]["display_percent"]
    print("strict metrics:", json.dumps(strict, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
