"""Operator command line: every library capability behind one entry point.

Stdout carries only the primary artifact of each subcommand (script text,
verdict record, report table, search results); diagnostics go to stderr so
outputs stay pipe-safe.  Exit codes: 0 success, 1 operational error (or an
incorrect verdict from ``assess``), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .assessment import AssessmentVerdict, assess
from .catalogue import Catalogue, Provenance
from .config import AppConfig, Preset, load_config, with_overrides
from .errors import GuardrailNoError, ScriptsmithError
from .evaluation import load_dataset, run_eval
from .gateway import LlmGateway
from .generation import BashScript, generate_script
from .refinement import refine_loop

CONFIG_ENV = "SCRIPTSMITH_CONFIG"


def _err(message: str) -> None:
    print(f"scriptsmith: {message}", file=sys.stderr)


def _load_app_config(args) -> AppConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    if not path:
        raise ScriptsmithError(
            f"no config file: pass --config or set {CONFIG_ENV}"
        )
    return load_config(path)


def _gateway(app_cfg: AppConfig) -> LlmGateway:
    return LlmGateway.from_specs(app_cfg.backends, app_cfg.templates)


def _catalogue(app_cfg: AppConfig, store_path: str | None = None) -> Catalogue:
    path = store_path or app_cfg.catalogue.path
    if path and Path(path).exists():
        return Catalogue.load(path, app_cfg.catalogue)
    return Catalogue(app_cfg.catalogue)


def _read_script(path: str) -> BashScript:
    return BashScript(Path(path).read_text(encoding="utf-8"))


def _pipeline_cfg(app_cfg: AppConfig, args) -> "PipelineConfig":
    overrides = {}
    if getattr(args, "preset", None):
        overrides["preset"] = Preset(args.preset)
    if getattr(args, "parallelism", None):
        overrides["parallelism"] = args.parallelism
    return with_overrides(app_cfg.pipeline, **overrides)


def cmd_generate(args) -> int:
    app_cfg = _load_app_config(args)
    cfg = _pipeline_cfg(app_cfg, args)
    generated = generate_script(_gateway(app_cfg), args.task, cfg)
    print(f"extraction rule: {generated.extraction_rule.value}", file=sys.stderr)
    sys.stdout.write(generated.script.text)
    return 0


def cmd_assess(args) -> int:
    app_cfg = _load_app_config(args)
    cfg = _pipeline_cfg(app_cfg, args)
    verdict = assess(_gateway(app_cfg), _read_script(args.script), args.task, cfg)
    print(json.dumps(verdict.to_record(), sort_keys=True, indent=2))
    return 0 if verdict.functionally_correct else 1


def cmd_refine(args) -> int:
    app_cfg = _load_app_config(args)
    cfg = _pipeline_cfg(app_cfg, args)
    script = _read_script(args.script)
    verdict = AssessmentVerdict.from_record(
        json.loads(Path(args.verdict).read_text(encoding="utf-8")))
    try:
        outcome = refine_loop(_gateway(app_cfg), args.task, script, verdict, cfg)
    except GuardrailNoError:
        print("refiner found no genuine defect; script unchanged", file=sys.stderr)
        sys.stdout.write(script.text)
        return 0
    if not outcome.changed:
        print("refinement produced no change", file=sys.stderr)
    sys.stdout.write(outcome.refined.text)
    return 0


def cmd_run(args) -> int:
    app_cfg = _load_app_config(args)
    cfg = _pipeline_cfg(app_cfg, args)
    taskset = load_dataset(args.dataset)
    catalogue = _catalogue(app_cfg) if app_cfg.catalogue.path else None
    report = run_eval(taskset, cfg, _gateway(app_cfg), catalogue)
    if args.out:
        report.save(args.out)
        print(f"report written to {args.out}", file=sys.stderr)
    sys.stdout.write(report.format_table())
    return 0


def cmd_catalogue(args) -> int:
    app_cfg = _load_app_config(args)
    store_path = args.store or app_cfg.catalogue.path
    catalogue = _catalogue(app_cfg, store_path)

    if args.catalogue_cmd == "add":
        entry_id = catalogue.add(args.statement, _read_script(args.script),
                                 Provenance(args.provenance))
        if store_path:
            catalogue.save(store_path)
        print(entry_id)
        return 0

    if args.catalogue_cmd == "search":
        result = catalogue.retrieve(args.q, args.k)
        payload = {
            "query": args.q,
            "high_confidence": result.high_confidence,
            "hits": [
                {
                    "id": entry.id,
                    "statement": entry.key.statement,
                    "script": entry.script.text,
                    "score": round(score.total, 6),
                }
                for entry, score in result.hits
            ],
        }
        print(json.dumps(payload, sort_keys=True, indent=2))
        return 0

    if args.catalogue_cmd == "export":
        catalogue.save(args.out)
        print(f"exported {len(catalogue)} entries to {args.out}", file=sys.stderr)
        return 0

    if args.catalogue_cmd == "import":
        imported = Catalogue.load(getattr(args, "infile"), app_cfg.catalogue)
        for entry in imported.entries():
            catalogue.upsert(entry)
        if store_path:
            catalogue.save(store_path)
        print(f"imported {len(imported)} entries", file=sys.stderr)
        return 0

    raise ScriptsmithError(f"unknown catalogue command {args.catalogue_cmd!r}")


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app_cfg = _load_app_config(args)
    if args.addr:
        from dataclasses import replace

        app_cfg = replace(app_cfg, service=replace(app_cfg.service, addr=args.addr))
    app = create_app(app_cfg)
    uvicorn.run(app, host=app_cfg.service.host, port=app_cfg.service.port,
                log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scriptsmith",
        description="Generate, assess, refine, and catalogue Bash remediation scripts.",
    )
    parser.add_argument("--config", "-c", help=f"config file (or ${CONFIG_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a script for a task")
    p.add_argument("--task", required=True)
    p.add_argument("--preset", choices=[x.value for x in Preset])
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("assess", help="judge a script against a task without running it")
    p.add_argument("--task", required=True)
    p.add_argument("--script", required=True, help="script file")
    p.add_argument("--preset", choices=[x.value for x in Preset])
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("refine", help="refine a flagged script from feedback")
    p.add_argument("--task", required=True)
    p.add_argument("--script", required=True, help="script file")
    p.add_argument("--verdict", required=True, help="assessment record file (JSON)")
    p.add_argument("--preset", choices=[x.value for x in Preset])
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("run", help="run an evaluation over a labeled dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--preset", choices=[x.value for x in Preset])
    p.add_argument("--out", help="report file to write")
    p.add_argument("--parallelism", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("catalogue", help="manage the reviewed script catalogue")
    p.add_argument("--store", help="catalogue store file (overrides config)")
    csub = p.add_subparsers(dest="catalogue_cmd", required=True)
    c = csub.add_parser("add")
    c.add_argument("--statement", required=True)
    c.add_argument("--script", required=True)
    c.add_argument("--provenance", default="approved",
                   choices=[x.value for x in Provenance])
    c = csub.add_parser("search")
    c.add_argument("--q", required=True)
    c.add_argument("--k", type=int, default=5)
    c = csub.add_parser("export")
    c.add_argument("--out", required=True)
    c = csub.add_parser("import")
    c.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_catalogue)

    p = sub.add_parser("serve", help="start the review service")
    p.add_argument("--addr", help="bind address host:port")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScriptsmithError as exc:
        _err(str(exc))
        return 1
    except OSError as exc:
        _err(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
