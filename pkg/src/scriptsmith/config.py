"""Dataclass configuration for backends, model roles, and the pipeline.

A single YAML file configures everything; sections map 1:1 onto the
dataclasses below.  Flags on the CLI override file values, and secrets
(backend auth tokens) are only ever read from environment variables.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import yaml

from .errors import ConfigError


class Role(str, Enum):
    GENERATOR = "generator"
    ASSESSOR = "assessor"
    REFINER = "refiner"


class Preset(str, Enum):
    SELF_REFLECTION = "self_reflection"
    PEER_REVIEW = "peer_review"
    MIXED_REFINE = "mixed_refine"
    CUSTOM = "custom"


class ScoreMode(str, Enum):
    CORRECTED = "corrected"
    VERBATIM = "verbatim"


@dataclass(frozen=True)
class ModelRole:
    """Binding of a pipeline role to a backend-specific model identifier."""

    role: Role
    model_id: str
    backend_id: str = "default"

    def __post_init__(self):
        if not self.model_id:
            raise ConfigError(f"model_id for role '{self.role.value}' must be non-empty")


@dataclass(frozen=True)
class RoleSet:
    generator: ModelRole
    assessor: ModelRole
    refiner: ModelRole

    def for_role(self, role: Role) -> ModelRole:
        return getattr(self, role.value)


@dataclass(frozen=True)
class BackendSpec:
    """One completion backend: either an HTTP endpoint or a scripted fixture."""

    id: str
    kind: str  # "http" | "scripted"
    endpoint: str | None = None
    auth_env: str | None = None
    wire_schema: str = "simple"  # "simple" | "openai_chat"
    fixture_path: str | None = None
    strict: bool = True
    timeout_s: float = 30.0

    def __post_init__(self):
        if self.kind not in ("http", "scripted"):
            raise ConfigError(f"backend '{self.id}': unknown kind '{self.kind}'")
        if self.kind == "http" and not self.endpoint:
            raise ConfigError(f"backend '{self.id}': http backend needs an endpoint")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one pipeline run needs to know.

    Preset invariants are enforced by :meth:`validate`:
    self_reflection binds the same model everywhere, peer_review uses a
    different assessor than generator, and mixed_refine keeps
    generator == assessor while swapping the refiner.
    """

    roles: RoleSet
    preset: Preset = Preset.PEER_REVIEW
    catalogue_threshold: float = 0.95
    alpha: float = 0.5
    score_mode: ScoreMode = ScoreMode.CORRECTED
    max_refine_rounds: int = 1
    reassess_after_refine: bool = False
    parallelism: int = 1
    max_tokens: int = 1024
    temperature: float = 0.0
    feedback_char_budget: int = 2000
    backend_retries: int = 2
    retry_backoff_s: float = 0.5
    syntax_checker_cmd: tuple[str, ...] | None = None

    def validate(self) -> "PipelineConfig":
        r = self.roles
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.max_refine_rounds < 0:
            raise ConfigError("max_refine_rounds must be >= 0")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.preset is Preset.SELF_REFLECTION:
            if not (r.generator.model_id == r.assessor.model_id == r.refiner.model_id):
                raise ConfigError("self_reflection preset requires one model for all roles")
        elif self.preset is Preset.PEER_REVIEW:
            if r.assessor.model_id == r.generator.model_id:
                raise ConfigError("peer_review preset requires assessor != generator")
        elif self.preset is Preset.MIXED_REFINE:
            if r.generator.model_id != r.assessor.model_id:
                raise ConfigError("mixed_refine preset requires generator == assessor")
            if r.refiner.model_id == r.generator.model_id:
                raise ConfigError("mixed_refine preset requires a distinct refiner")
        return self

    def snapshot(self) -> dict:
        """Deterministic summary embedded in reports."""
        return {
            "preset": self.preset.value,
            "generator": self.roles.generator.model_id,
            "assessor": self.roles.assessor.model_id,
            "refiner": self.roles.refiner.model_id,
            "catalogue_threshold": self.catalogue_threshold,
            "alpha": self.alpha,
            "score_mode": self.score_mode.value,
            "max_refine_rounds": self.max_refine_rounds,
            "reassess_after_refine": self.reassess_after_refine,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
        }


@dataclass(frozen=True)
class CatalogueConfig:
    path: str | None = None
    dim: int = 256
    alpha: float = 0.5
    threshold: float = 0.95
    score_mode: ScoreMode = ScoreMode.CORRECTED
    duplicate_statement: str = "version"  # "version" | "reject"
    embedder: str = "hash-v1"
    embedder_endpoint: str | None = None

    def __post_init__(self):
        if self.duplicate_statement not in ("version", "reject"):
            raise ConfigError("duplicate_statement must be 'version' or 'reject'")
        if self.dim < 1:
            raise ConfigError("embedding dim must be >= 1")


@dataclass(frozen=True)
class ServiceConfig:
    addr: str = "127.0.0.1:8080"
    auth_token_env: str | None = None
    ui_dir: str | None = None

    @property
    def host(self) -> str:
        return self.addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.addr.rsplit(":", 1)[1])

    def auth_token(self) -> str | None:
        if not self.auth_token_env:
            return None
        return os.environ.get(self.auth_token_env)


@dataclass(frozen=True)
class AppConfig:
    backends: tuple[BackendSpec, ...]
    pipeline: PipelineConfig
    catalogue: CatalogueConfig = CatalogueConfig()
    service: ServiceConfig = ServiceConfig()
    outcome_store_path: str | None = None
    templates: dict = field(default_factory=dict)


def _resolve(base: Path, value: str | None) -> str | None:
    if value is None:
        return None
    p = Path(value)
    return str(p if p.is_absolute() else base / p)


def _role(name: str, raw: dict) -> ModelRole:
    try:
        return ModelRole(
            role=Role(name),
            model_id=str(raw["model"]),
            backend_id=str(raw.get("backend", "default")),
        )
    except KeyError as exc:
        raise ConfigError(f"role '{name}' is missing key {exc}") from exc


def load_config(path: str | Path) -> AppConfig:
    """Parse a YAML config file into an :class:`AppConfig`.

    Relative paths inside the file resolve against the file's directory.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    base = path.resolve().parent

    backends = []
    for spec in raw.get("backends", []):
        backends.append(
            BackendSpec(
                id=str(spec.get("id", "default")),
                kind=str(spec.get("kind", "scripted")),
                endpoint=spec.get("endpoint"),
                auth_env=spec.get("auth_env"),
                wire_schema=str(spec.get("wire_schema", "simple")),
                fixture_path=_resolve(base, spec.get("fixture")),
                strict=bool(spec.get("strict", True)),
                timeout_s=float(spec.get("timeout_s", 30.0)),
            )
        )
    if not backends:
        raise ConfigError("config must declare at least one backend")

    roles_raw = raw.get("roles")
    if not roles_raw:
        raise ConfigError("config must declare roles (generator/assessor/refiner)")
    roles = RoleSet(
        generator=_role("generator", roles_raw["generator"]),
        assessor=_role("assessor", roles_raw["assessor"]),
        refiner=_role("refiner", roles_raw["refiner"]),
    )

    pl = raw.get("pipeline", {})
    checker = pl.get("syntax_checker_cmd")
    pipeline = PipelineConfig(
        roles=roles,
        preset=Preset(pl.get("preset", Preset.PEER_REVIEW.value)),
        catalogue_threshold=float(pl.get("catalogue_threshold", 0.95)),
        alpha=float(pl.get("alpha", 0.5)),
        score_mode=ScoreMode(pl.get("score_mode", ScoreMode.CORRECTED.value)),
        max_refine_rounds=int(pl.get("max_refine_rounds", 1)),
        reassess_after_refine=bool(pl.get("reassess_after_refine", False)),
        parallelism=int(pl.get("parallelism", 1)),
        max_tokens=int(pl.get("max_tokens", 1024)),
        temperature=float(pl.get("temperature", 0.0)),
        feedback_char_budget=int(pl.get("feedback_char_budget", 2000)),
        backend_retries=int(pl.get("backend_retries", 2)),
        retry_backoff_s=float(pl.get("retry_backoff_s", 0.5)),
        syntax_checker_cmd=tuple(checker) if checker else None,
    ).validate()

    cat = raw.get("catalogue", {})
    catalogue = CatalogueConfig(
        path=_resolve(base, cat.get("path")),
        dim=int(cat.get("dim", 256)),
        alpha=float(cat.get("alpha", pipeline.alpha)),
        threshold=float(cat.get("threshold", pipeline.catalogue_threshold)),
        score_mode=ScoreMode(cat.get("score_mode", pipeline.score_mode.value)),
        duplicate_statement=str(cat.get("duplicate_statement", "version")),
        embedder=str(cat.get("embedder", "hash-v1")),
        embedder_endpoint=cat.get("embedder_endpoint"),
    )

    svc = raw.get("service", {})
    service = ServiceConfig(
        addr=str(svc.get("addr", "127.0.0.1:8080")),
        auth_token_env=svc.get("auth_token_env"),
        ui_dir=_resolve(base, svc.get("ui_dir")),
    )

    templates = raw.get("templates", {}) or {}
    if not isinstance(templates, dict):
        raise ConfigError("templates section must map template ids to text")

    return AppConfig(
        backends=tuple(backends),
        pipeline=pipeline,
        catalogue=catalogue,
        service=service,
        outcome_store_path=_resolve(base, (raw.get("outcomes", {}) or {}).get("path")),
        templates=templates,
    )


def with_overrides(cfg: PipelineConfig, **kwargs) -> PipelineConfig:
    """Return a copy of *cfg* with the given fields replaced and re-validated."""
    clean = {k: v for k, v in kwargs.items() if v is not None}
    return replace(cfg, **clean).validate() if clean else cfg
