"""Gateway: template rendering, scripted backend determinism, call counting."""

from __future__ import annotations

import json
import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scriptsmith.config import ModelRole, Role
from scriptsmith.errors import FixtureMiss, MissingBinding, UnknownTemplate
from scriptsmith.gateway import (
    DEFAULT_TEMPLATES,
    FixtureEntry,
    LlmGateway,
    PromptRequest,
    ScriptedBackend,
    TemplateRegistry,
    render_prompt,
)

REQUIRED_TEMPLATES = (
    "gen.initial",
    "assess.functionality",
    "assess.similarity",
    "assess.difference",
    "refine.explain",
    "refine.regenerate",
)

GEN_ROLE = ModelRole(Role.GENERATOR, "m-gen")


def test_required_templates_registered():
    registry = TemplateRegistry()
    for template_id in REQUIRED_TEMPLATES:
        assert template_id in registry.ids()


def test_render_substitutes_binding_verbatim():
    out = render_prompt("gen.initial", {"task": "list files"})
    assert "list files" in out


def test_render_similarity_contains_both_bindings():
    out = render_prompt("assess.similarity",
                        {"task": "T-marker", "functionality": "F-marker"})
    assert "T-marker" in out and "F-marker" in out


def test_render_missing_binding():
    with pytest.raises(MissingBinding) as exc:
        render_prompt("refine.explain", {})
    assert exc.value.name == "task"


def test_render_unknown_template():
    with pytest.raises(UnknownTemplate):
        render_prompt("gen.bogus", {"task": "x"})


def test_render_is_pure():
    bindings = {"task": "check ${DISK} usage {{literal}}"}
    assert render_prompt("gen.initial", bindings) == render_prompt("gen.initial", bindings)


@given(value=st.text(min_size=1, max_size=60).filter(lambda s: "{{" not in s))
def test_render_leaves_no_placeholder(value):
    registry = TemplateRegistry()
    for template_id in REQUIRED_TEMPLATES:
        bindings = {name: value for name in registry.placeholders(template_id)}
        out = registry.render(template_id, bindings)
        assert "{{" not in out
        assert value in out


def test_template_override():
    registry = TemplateRegistry({"gen.initial": "custom: {{task}}"})
    assert registry.render("gen.initial", {"task": "x"}) == "custom: x"
    # other templates keep their defaults
    assert registry.render("assess.functionality", {"script": "s"}) \
        == DEFAULT_TEMPLATES["assess.functionality"].replace("{{script}}", "s")


# -- scripted backend ---------------------------------------------------------

def _backend(entries, **kwargs) -> ScriptedBackend:
    return ScriptedBackend(entries, **kwargs)


def test_scripted_exact_match():
    backend = _backend([FixtureEntry("gen.initial", "exact", "P", "resp")])
    assert backend.complete("m", "gen.initial", "P", 10, 0.0) == "resp"
    with pytest.raises(FixtureMiss):
        backend.complete("m", "gen.initial", "P2", 10, 0.0)


def test_scripted_substring_and_first_match_wins():
    backend = _backend([
        FixtureEntry("*", "substring", "alpha", "first"),
        FixtureEntry("*", "substring", "alpha", "second"),
    ])
    assert backend.complete("m", "t", "xx alpha yy", 10, 0.0) == "first"


def test_scripted_template_id_scoping():
    backend = _backend([
        FixtureEntry("assess.similarity", "substring", "needle", "sim"),
        FixtureEntry("assess.difference", "substring", "needle", "diff"),
    ])
    assert backend.complete("m", "assess.difference", "a needle b", 10, 0.0) == "diff"


def test_scripted_lenient_returns_default():
    backend = _backend([], strict=False, default="fallback")
    assert backend.complete("m", "t", "anything", 10, 0.0) == "fallback"
    empty = _backend([], strict=False)
    assert empty.complete("m", "t", "anything", 10, 0.0) == ""


def test_scripted_deterministic_repeat():
    backend = _backend([FixtureEntry("*", "substring", "q", "same bytes")])
    first = backend.complete("m", "t", "q", 10, 0.0)
    second = backend.complete("m", "t", "q", 10, 0.0)
    assert first == second == "same bytes"


def test_scripted_from_file(tmp_path):
    path = tmp_path / "fixture.json"
    path.write_text(json.dumps({
        "strict": False,
        "default": "dflt",
        "entries": [{"template_id": "gen.initial", "prompt_match": "substring",
                     "prompt": "hello", "response": "world"}],
    }))
    backend = ScriptedBackend.from_file(path)
    assert backend.complete("m", "gen.initial", "say hello", 10, 0.0) == "world"
    assert backend.complete("m", "gen.initial", "other", 10, 0.0) == "dflt"


# -- gateway ------------------------------------------------------------------

def _gateway(entries) -> LlmGateway:
    return LlmGateway({"default": _backend(entries, backend_id="default")})


def test_complete_returns_fixture_text_and_counts():
    gw = _gateway([FixtureEntry("gen.initial", "substring", "list files",
                                "```bash\nls\n```")])
    req = PromptRequest("gen.initial", {"task": "list files"})
    result = gw.complete(req, GEN_ROLE)
    assert result.text == "```bash\nls\n```"
    assert result.backend_id == "default"
    assert result.usage.completion_tokens == len(result.text.split())
    assert gw.call_count(Role.GENERATOR) == 1
    assert gw.call_count() == 1


def test_complete_double_invocation_identical():
    gw = _gateway([FixtureEntry("*", "substring", "task-x", "stable reply")])
    req = PromptRequest("gen.initial", {"task": "task-x"})
    assert gw.complete(req, GEN_ROLE).text == gw.complete(req, GEN_ROLE).text
    assert gw.call_count() == 2


def test_strict_miss_propagates():
    gw = _gateway([])
    with pytest.raises(FixtureMiss):
        gw.complete(PromptRequest("gen.initial", {"task": "unmapped"}), GEN_ROLE)


def test_concurrent_completes_independent():
    entries = [FixtureEntry("*", "substring", f"task-{i}", f"resp-{i}")
               for i in range(8)]
    gw = _gateway(entries)
    results: dict[int, str] = {}

    def worker(i: int) -> None:
        req = PromptRequest("gen.initial", {"task": f"task-{i}"})
        results[i] = gw.complete(req, GEN_ROLE).text

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == {i: f"resp-{i}" for i in range(8)}
    assert gw.call_count() == 8
