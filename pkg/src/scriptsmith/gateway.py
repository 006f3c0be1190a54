"""Uniform interface to text-completion backends.

Prompts are rendered from a small registry of ``{{placeholder}}`` templates
and dispatched per role to a configured backend.  The scripted backend is a
pure function of ``(template_id, rendered prompt)`` so that every pipeline
behaviour can be exercised deterministically offline; the HTTP backend is a
thin adapter kept behind the same call shape.
"""

from __future__ import annotations

import json
import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .config import BackendSpec, ModelRole, Role
from .errors import (
    BackendUnreachable,
    ConfigError,
    FixtureMiss,
    MissingBinding,
    TokenLimitExceeded,
    UnknownTemplate,
)

# The six templates every pipeline run needs.  The wording is this package's
# own; placeholders use {{name}} so literal Bash ${var} text never collides.
DEFAULT_TEMPLATES: dict[str, str] = {
    "gen.initial": (
        "You are an experienced site reliability engineer.\n"
        "Write one Bash script that performs the following action.\n"
        "Action: {{task}}\n"
        "Reply with a single fenced ```bash code block and nothing else."
    ),
    "assess.functionality": (
        "Read the following Bash script and describe in plain English what it "
        "does. Mention every observable effect and any fixed parameter values. "
        "Do not guess at intent beyond the code.\n"
        "Script:\n{{script}}\n"
        "Functionality:"
    ),
    "assess.similarity": (
        "You compare a task with a script's described functionality.\n"
        "Task: {{task}}\n"
        "Functionality: {{functionality}}\n"
        "Explain in which ways the functionality matches the task intent. "
        "Then conclude with a final line of exactly "
        "'VERDICT: ALIGNED' if the functionality fulfils the task, or "
        "'VERDICT: DEVIATES' if it does not."
    ),
    "assess.difference": (
        "You compare a task with a script's described functionality.\n"
        "Task: {{task}}\n"
        "Functionality: {{functionality}}\n"
        "List every way the functionality differs from what the task asks "
        "for, including wrong parameters, missing steps, or extra effects. "
        "Then conclude with a final line of exactly "
        "'VERDICT: ALIGNED' if there is no meaningful difference, or "
        "'VERDICT: DEVIATES' if there is."
    ),
    "refine.explain": (
        "A script was flagged as not performing its task.\n"
        "Task: {{task}}\n"
        "Script:\n{{script}}\n"
        "Assessment findings:\n{{findings}}\n"
        "Briefly explain why the script fails to perform the task. "
        "Be concrete and keep it short. If you cannot identify a genuine "
        "defect, reply with exactly 'NO ERROR FOUND' and nothing else."
    ),
    "refine.regenerate": (
        "Rewrite the Bash script below so it correctly performs the task, "
        "using the feedback.\n"
        "Task: {{task}}\n"
        "Current script:\n{{script}}\n"
        "Feedback: {{feedback}}\n"
        "Reply with a single fenced ```bash code block and nothing else."
    ),
}

_PLACEHOLDER = re.compile(r"\{\{([a-z][a-z0-9_.]*)\}\}")


@dataclass(frozen=True)
class PromptRequest:
    """One completion request; temperature defaults to 0 for reproducibility."""

    template_id: str
    bindings: dict[str, str] = field(default_factory=dict)
    max_tokens: int = 1024
    temperature: float = 0.0


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int
    completion_tokens: int


@dataclass(frozen=True)
class CompletionText:
    text: str
    backend_id: str
    usage: TokenUsage


class TemplateRegistry:
    """Immutable map of template id -> text with strict placeholder handling."""

    def __init__(self, overrides: dict[str, str] | None = None):
        self._templates = dict(DEFAULT_TEMPLATES)
        if overrides:
            self._templates.update({str(k): str(v) for k, v in overrides.items()})

    def ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._templates))

    def placeholders(self, template_id: str) -> set[str]:
        return set(_PLACEHOLDER.findall(self._template(template_id)))

    def _template(self, template_id: str) -> str:
        try:
            return self._templates[template_id]
        except KeyError:
            raise UnknownTemplate(f"no template registered with id '{template_id}'") from None

    def render(self, template_id: str, bindings: dict[str, str]) -> str:
        """Substitute every placeholder; pure in its inputs.

        A single regex pass means substituted values are never re-scanned, so
        a binding containing ``{{...}}`` text cannot trigger a second
        substitution or leak an unresolved placeholder.
        """
        template = self._template(template_id)

        def sub(match: re.Match) -> str:
            name = match.group(1)
            if name not in bindings:
                raise MissingBinding(name)
            return str(bindings[name])

        return _PLACEHOLDER.sub(sub, template)


_DEFAULT_REGISTRY = TemplateRegistry()


def render_prompt(template_id: str, bindings: dict[str, str],
                  registry: TemplateRegistry | None = None) -> str:
    """Render a registered template with the given bindings."""
    return (registry or _DEFAULT_REGISTRY).render(template_id, bindings)


def _approx_tokens(text: str) -> int:
    # Deterministic stand-in for provider token counts.
    return len(text.split())


@dataclass(frozen=True)
class FixtureEntry:
    """One scripted response; ``prompt_match`` selects exact or substring matching."""

    template_id: str
    prompt_match: str  # "exact" | "substring"
    prompt: str
    response: str

    def matches(self, template_id: str, prompt: str) -> bool:
        if self.template_id not in ("*", template_id):
            return False
        if self.prompt_match == "exact":
            return prompt == self.prompt
        if self.prompt_match == "substring":
            return self.prompt in prompt
        raise ConfigError(f"unknown prompt_match '{self.prompt_match}'")


class ScriptedBackend:
    """Deterministic backend answering from an ordered fixture list.

    First matching entry wins.  In strict mode an unmatched prompt raises
    :class:`FixtureMiss`; in lenient mode the configured default (or empty
    text) is returned instead.
    """

    def __init__(self, entries: list[FixtureEntry], *, strict: bool = True,
                 default: str | None = None, backend_id: str = "scripted"):
        self.entries = list(entries)
        self.strict = strict
        self.default = default
        self.id = backend_id

    @classmethod
    def from_file(cls, path: str | Path, *, strict: bool = True,
                  backend_id: str = "scripted") -> "ScriptedBackend":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        entries = [
            FixtureEntry(
                template_id=str(e.get("template_id", "*")),
                prompt_match=str(e.get("prompt_match", "substring")),
                prompt=str(e["prompt"]),
                response=str(e["response"]),
            )
            for e in raw.get("entries", [])
        ]
        return cls(entries, strict=bool(raw.get("strict", strict)),
                   default=raw.get("default"), backend_id=backend_id)

    def complete(self, model_id: str, template_id: str, prompt: str,
                 max_tokens: int, temperature: float) -> str:
        for entry in self.entries:
            if entry.matches(template_id, prompt):
                return entry.response
        if self.strict:
            raise FixtureMiss(
                f"no fixture entry for template '{template_id}' "
                f"(prompt head: {prompt[:80]!r})"
            )
        return self.default if self.default is not None else ""


class HttpBackend:
    """Adapter for a remote completion endpoint.

    Two wire schemas are supported: ``simple`` posts
    ``{model, prompt, max_tokens, temperature}`` and reads ``{text}``;
    ``openai_chat`` posts a one-message chat body and reads
    ``choices[0].message.content``.
    """

    def __init__(self, spec: BackendSpec):
        self.spec = spec
        self.id = spec.id

    def _headers(self) -> dict[str, str]:
        import os

        headers = {"content-type": "application/json"}
        if self.spec.auth_env:
            token = os.environ.get(self.spec.auth_env)
            if token:
                headers["authorization"] = f"Bearer {token}"
        return headers

    def complete(self, model_id: str, template_id: str, prompt: str,
                 max_tokens: int, temperature: float) -> str:
        import httpx

        if self.spec.wire_schema == "openai_chat":
            body = {
                "model": model_id,
                "messages": [{"role": "user", "content": prompt}],
                "max_tokens": max_tokens,
                "temperature": temperature,
            }
        else:
            body = {
                "model": model_id,
                "prompt": prompt,
                "max_tokens": max_tokens,
                "temperature": temperature,
            }
        try:
            resp = httpx.post(self.spec.endpoint, json=body,
                              headers=self._headers(), timeout=self.spec.timeout_s)
        except httpx.HTTPError as exc:
            raise BackendUnreachable(f"backend '{self.id}': {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise BackendUnreachable(f"backend '{self.id}': HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise BackendUnreachable(
                f"backend '{self.id}': HTTP {resp.status_code}: {resp.text[:200]}"
            )
        data = resp.json()
        if "error" in data and "token" in str(data.get("error", "")).lower():
            raise TokenLimitExceeded(str(data["error"]))
        if self.spec.wire_schema == "openai_chat":
            try:
                return data["choices"][0]["message"]["content"]
            except (KeyError, IndexError) as exc:
                raise BackendUnreachable(f"backend '{self.id}': malformed response") from exc
        if "text" not in data:
            raise BackendUnreachable(f"backend '{self.id}': malformed response")
        return str(data["text"])


def build_backend(spec: BackendSpec):
    if spec.kind == "scripted":
        if not spec.fixture_path:
            return ScriptedBackend([], strict=spec.strict, backend_id=spec.id)
        return ScriptedBackend.from_file(spec.fixture_path, strict=spec.strict,
                                         backend_id=spec.id)
    return HttpBackend(spec)


class LlmGateway:
    """Routes completion requests to the backend bound to each role.

    Instances are shareable across workers: rendering is pure and the only
    mutable state is a usage counter guarded by a lock.
    """

    def __init__(self, backends: dict[str, object],
                 registry: TemplateRegistry | None = None):
        if not backends:
            raise ConfigError("gateway needs at least one backend")
        self.backends = dict(backends)
        self.registry = registry or TemplateRegistry()
        self._lock = threading.Lock()
        self._calls: Counter = Counter()

    @classmethod
    def from_specs(cls, specs, templates: dict[str, str] | None = None) -> "LlmGateway":
        backends = {spec.id: build_backend(spec) for spec in specs}
        return cls(backends, TemplateRegistry(templates))

    def render(self, template_id: str, bindings: dict[str, str]) -> str:
        return self.registry.render(template_id, bindings)

    def _backend_for(self, role: ModelRole):
        backend = self.backends.get(role.backend_id)
        if backend is None:
            if len(self.backends) == 1:
                return next(iter(self.backends.values()))
            raise ConfigError(
                f"role '{role.role.value}' is bound to unknown backend '{role.backend_id}'"
            )
        return backend

    def complete(self, req: PromptRequest, role: ModelRole) -> CompletionText:
        """Render the request and return the backend's completion text."""
        prompt = self.render(req.template_id, req.bindings)
        backend = self._backend_for(role)
        text = backend.complete(role.model_id, req.template_id, prompt,
                                req.max_tokens, req.temperature)
        with self._lock:
            self._calls[role.role.value] += 1
        return CompletionText(
            text=text,
            backend_id=backend.id,
            usage=TokenUsage(_approx_tokens(prompt), _approx_tokens(text)),
        )

    def call_count(self, role: Role | str | None = None) -> int:
        with self._lock:
            if role is None:
                return sum(self._calls.values())
            key = role.value if isinstance(role, Role) else str(role)
            return self._calls[key]


class CountingGateway:
    """Per-run view over a shared gateway that tallies calls by role.

    Used by the pipeline so call accounting stays exact when many actions
    share one gateway across threads.
    """

    def __init__(self, inner):
        self.inner = inner
        self.counts: Counter = Counter()

    def render(self, template_id: str, bindings: dict[str, str]) -> str:
        return self.inner.render(template_id, bindings)

    def complete(self, req: PromptRequest, role: ModelRole) -> CompletionText:
        result = self.inner.complete(req, role)
        self.counts[role.role.value] += 1
        return result

    def by_role(self) -> dict[str, int]:
        return {r.value: int(self.counts[r.value]) for r in Role}
