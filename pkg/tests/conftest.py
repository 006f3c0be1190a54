"""Shared fixtures: scripted gateways, configs, and fixture-file loaders."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import pytest

from scriptsmith.config import ModelRole, PipelineConfig, Preset, Role, RoleSet
from scriptsmith.gateway import FixtureEntry, LlmGateway, ScriptedBackend

FIXTURES = Path(__file__).parent / "fixtures"


def make_roles(generator: str = "gen-large", assessor: str = "judge-small",
               refiner: str | None = None) -> RoleSet:
    return RoleSet(
        generator=ModelRole(Role.GENERATOR, generator),
        assessor=ModelRole(Role.ASSESSOR, assessor),
        refiner=ModelRole(Role.REFINER, refiner or generator),
    )


def make_cfg(**overrides) -> PipelineConfig:
    defaults = dict(
        roles=make_roles(),
        preset=Preset.PEER_REVIEW,
        retry_backoff_s=0.0,
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults).validate()


class TemplateSpyBackend(ScriptedBackend):
    """Scripted backend that additionally tallies calls per template id."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.template_calls: Counter = Counter()

    def complete(self, model_id, template_id, prompt, max_tokens, temperature):
        self.template_calls[template_id] += 1
        return super().complete(model_id, template_id, prompt, max_tokens, temperature)


def entries_from(dicts: list[dict]) -> list[FixtureEntry]:
    return [
        FixtureEntry(
            template_id=d.get("template_id", "*"),
            prompt_match=d.get("prompt_match", "substring"),
            prompt=d["prompt"],
            response=d["response"],
        )
        for d in dicts
    ]


def gateway_from(dicts: list[dict], *, strict: bool = True,
                 default: str | None = None, spy: bool = False) -> LlmGateway:
    cls = TemplateSpyBackend if spy else ScriptedBackend
    backend = cls(entries_from(dicts), strict=strict, default=default,
                  backend_id="default")
    return LlmGateway({"default": backend})


def replay_fixture_entries() -> list[dict]:
    raw = json.loads((FIXTURES / "replay" / "llm_fixture.json").read_text())
    return raw["entries"]


def replay_gateway(*, spy: bool = False) -> LlmGateway:
    return gateway_from(replay_fixture_entries(), spy=spy)


def replay_statements() -> list[str]:
    tasks = []
    with open(FIXTURES / "replay" / "dataset.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                tasks.append(json.loads(line)["task"])
    return tasks


@pytest.fixture
def cfg() -> PipelineConfig:
    return make_cfg()


@pytest.fixture
def scoring_pairs() -> list[tuple[str, str]]:
    raw = json.loads((FIXTURES / "scoring_catalogue.json").read_text())
    return [(r["statement"], r["script"]) for r in raw]
