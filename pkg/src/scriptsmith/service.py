"""HTTP service exposing the pipeline, review queue, and catalogue.

Actions run asynchronously: submission returns an outcome id immediately and
clients poll until the outcome record replaces the running placeholder.
Every response is a pure view of library state; the service adds transport,
idempotency, and error mapping, never correctness logic of its own.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor

from fastapi import Depends, FastAPI, Header, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .catalogue import Catalogue
from .config import AppConfig, Preset, with_overrides
from .errors import (
    AlreadyDecided,
    BackendUnreachable,
    ConfigError,
    FixtureMiss,
    InvalidInput,
    ScriptsmithError,
    SyntaxRejected,
    TokenLimitExceeded,
    UnknownOutcome,
)
from .gateway import LlmGateway
from .pipeline import (
    Decision,
    OutcomeStore,
    ReviewDecision,
    record_decision,
    run_action,
)

_STATUS_BY_CODE = {"not_found": 404, "conflict": 409, "invalid": 400, "backend": 502}


class ApiError(Exception):
    def __init__(self, code: str, message: str, detail=None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail

    def to_response(self) -> JSONResponse:
        return JSONResponse(
            status_code=_STATUS_BY_CODE[self.code],
            content={"code": self.code, "message": self.message,
                     "detail": self.detail},
        )


def _map_error(exc: Exception) -> ApiError:
    if isinstance(exc, UnknownOutcome):
        return ApiError("not_found", str(exc))
    if isinstance(exc, AlreadyDecided):
        return ApiError("conflict", str(exc))
    if isinstance(exc, SyntaxRejected):
        return ApiError("invalid", str(exc),
                        detail={"findings": [f.to_record() for f in exc.findings]})
    if isinstance(exc, (InvalidInput, ConfigError, ValueError)):
        return ApiError("invalid", str(exc))
    if isinstance(exc, (BackendUnreachable, FixtureMiss, TokenLimitExceeded)):
        return ApiError("backend", str(exc))
    if isinstance(exc, ScriptsmithError):
        return ApiError("invalid", str(exc))
    raise exc


class ActionRequest(BaseModel):
    statement: str
    preset: str | None = None


class DecisionRequest(BaseModel):
    decision: str
    reviewer: str
    edited_script: str | None = None
    note: str = ""


def _entry_payload(entry, score=None) -> dict:
    payload = {
        "id": entry.id,
        "statement": entry.key.statement,
        "script": entry.script.text,
        "provenance": entry.provenance.value,
        "created_at": entry.created_at,
        "source_outcome_id": entry.source_outcome_id,
    }
    if score is not None:
        payload["score"] = score.to_record()
    return payload


def create_app(app_cfg: AppConfig, *, gateway: LlmGateway | None = None,
               catalogue: Catalogue | None = None,
               store: OutcomeStore | None = None,
               max_workers: int = 4) -> FastAPI:
    """Build the service around an existing or freshly wired component set."""
    gateway = gateway or LlmGateway.from_specs(app_cfg.backends, app_cfg.templates)
    if catalogue is None:
        if app_cfg.catalogue.path:
            catalogue = Catalogue.load(app_cfg.catalogue.path, app_cfg.catalogue)
        else:
            catalogue = Catalogue(app_cfg.catalogue)
    store = store or OutcomeStore(app_cfg.outcome_store_path)
    pipeline_cfg = app_cfg.pipeline
    executor = ThreadPoolExecutor(max_workers=max_workers,
                                  thread_name_prefix="scriptsmith-run")
    futures: dict[str, object] = {}
    idempotency: dict[str, str] = {}
    submit_lock = threading.Lock()
    expected_token = app_cfg.service.auth_token()

    app = FastAPI(title="scriptsmith", version=__version__)
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return exc.to_response()

    def require_auth(authorization: str | None = Header(default=None)):
        if expected_token is None:
            return
        if authorization != f"Bearer {expected_token}":
            raise ApiError("invalid", "missing or invalid bearer token")

    def _persist_catalogue() -> None:
        if app_cfg.catalogue.path:
            catalogue.save(app_cfg.catalogue.path)

    def _run_job(statement: str, cfg, outcome_id: str) -> None:
        try:
            outcome = run_action(statement, cfg, gateway, catalogue, outcome_id)
        except Exception as exc:  # defensive: the record must always appear
            from .generation import BashScript
            from .pipeline import PipelineOutcome, Source, Status

            outcome = PipelineOutcome(
                id=outcome_id, statement=statement, source=Source.GENERATED,
                final_script=BashScript(""), status=Status.FAILED,
                error=f"{type(exc).__name__}: {exc}",
            )
        store.put(outcome)

    @app.post("/v1/actions", status_code=202, dependencies=[Depends(require_auth)])
    def submit_action(body: ActionRequest,
                      idempotency_key: str | None = Header(default=None)):
        if not body.statement.strip():
            raise ApiError("invalid", "statement must be non-empty")
        cfg = pipeline_cfg
        if body.preset:
            try:
                cfg = with_overrides(pipeline_cfg, preset=Preset(body.preset))
            except (ValueError, ConfigError) as exc:
                raise _map_error(exc) from exc
        with submit_lock:
            if idempotency_key and idempotency_key in idempotency:
                return {"outcome_id": idempotency[idempotency_key]}
            outcome_id = f"a-{uuid.uuid4().hex[:12]}"
            if idempotency_key:
                idempotency[idempotency_key] = outcome_id
            futures[outcome_id] = executor.submit(_run_job, body.statement, cfg,
                                                  outcome_id)
        return {"outcome_id": outcome_id}

    @app.get("/v1/outcomes/{outcome_id}", dependencies=[Depends(require_auth)])
    def get_outcome(outcome_id: str):
        if outcome_id in store:
            return store.get(outcome_id).to_record()
        if outcome_id in futures:
            return {"id": outcome_id, "status": "running"}
        raise ApiError("not_found", f"no outcome with id '{outcome_id}'")

    @app.get("/v1/reviews", dependencies=[Depends(require_auth)])
    def list_reviews(status: str = "pending"):
        if status != "pending":
            raise ApiError("invalid", "only status=pending is supported")
        return [o.to_record() for o in store.list_pending()]

    @app.post("/v1/reviews/{outcome_id}/decision",
              dependencies=[Depends(require_auth)])
    def decide(outcome_id: str, body: DecisionRequest):
        try:
            decision = ReviewDecision(
                outcome_id=outcome_id,
                decision=Decision(body.decision),
                reviewer=body.reviewer,
                edited_script=body.edited_script,
                note=body.note,
            )
            outcome = record_decision(decision, store, catalogue)
        except Exception as exc:
            raise _map_error(exc) from exc
        if decision.decision in (Decision.APPROVE, Decision.EDIT):
            _persist_catalogue()
        return outcome.to_record()

    @app.get("/v1/catalogue/search", dependencies=[Depends(require_auth)])
    def search(q: str = "", k: int = 5):
        if k < 1:
            raise ApiError("invalid", "k must be >= 1")
        if not q.strip():
            raise ApiError("invalid", "q must be non-empty")
        result = catalogue.retrieve(q, k)
        return {
            "query": q,
            "high_confidence": result.high_confidence,
            "hits": [_entry_payload(entry, score) for entry, score in result.hits],
        }

    @app.get("/v1/catalogue/entries", dependencies=[Depends(require_auth)])
    def list_entries():
        return [_entry_payload(e) for e in catalogue.entries()]

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "version": __version__,
            "backends": sorted(gateway.backends),
            "catalogue_size": len(catalogue),
        }

    if app_cfg.service.ui_dir:
        from pathlib import Path

        ui_dir = Path(app_cfg.service.ui_dir)
        if ui_dir.is_dir():
            from fastapi.staticfiles import StaticFiles

            app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True),
                      name="ui")

    # shared with tests and the CLI
    app.state.gateway = gateway
    app.state.catalogue = catalogue
    app.state.store = store
    return app
