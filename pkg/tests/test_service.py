"""Service endpoints as pure views over library state, plus error mapping."""

from __future__ import annotations

import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from scriptsmith.catalogue import Catalogue
from scriptsmith.config import (
    AppConfig,
    BackendSpec,
    CatalogueConfig,
    ServiceConfig,
)
from scriptsmith.generation import BashScript
from scriptsmith.service import create_app

from conftest import FIXTURES, make_cfg, replay_gateway

T01 = "list all files in the current directory including hidden ones"
T07 = "print the process ids of the top 5 cpu consumers"


def make_app_cfg(tmp_path, **service_kwargs) -> AppConfig:
    return AppConfig(
        backends=(BackendSpec(id="default", kind="scripted"),),
        pipeline=make_cfg(),
        catalogue=CatalogueConfig(path=str(tmp_path / "catalogue.jsonl")),
        service=ServiceConfig(**service_kwargs),
        outcome_store_path=str(tmp_path / "outcomes.jsonl"),
    )


@pytest.fixture
def client(tmp_path):
    app = create_app(make_app_cfg(tmp_path), gateway=replay_gateway())
    with TestClient(app) as c:
        yield c


def submit_and_wait(client, statement: str, timeout: float = 10.0,
                    **kwargs) -> dict:
    resp = client.post("/v1/actions", json={"statement": statement}, **kwargs)
    assert resp.status_code == 202, resp.text
    outcome_id = resp.json()["outcome_id"]
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        record = client.get(f"/v1/outcomes/{outcome_id}").json()
        if record.get("status") != "running":
            return record
        time.sleep(0.01)
    raise AssertionError("outcome never finished")


def test_health(client):
    body = client.get("/v1/health").json()
    assert body["status"] == "ok"
    assert "version" in body


def test_submit_poll_and_full_record(client):
    record = submit_and_wait(client, T01)
    assert record["status"] == "needs_review"
    assert record["final_script"] == "ls -la\n"
    assert record["rounds"][0]["verdict"]["functionally_correct"] is True


def test_empty_statement_invalid(client):
    resp = client.post("/v1/actions", json={"statement": "   "})
    assert resp.status_code == 400
    assert resp.json()["code"] == "invalid"


def test_unknown_outcome_not_found(client):
    resp = client.get("/v1/outcomes/o-missing")
    assert resp.status_code == 404
    assert resp.json()["code"] == "not_found"


def test_idempotency_key_returns_same_outcome(client):
    headers = {"Idempotency-Key": "key-1"}
    first = client.post("/v1/actions", json={"statement": T01}, headers=headers)
    second = client.post("/v1/actions", json={"statement": T01}, headers=headers)
    assert first.json()["outcome_id"] == second.json()["outcome_id"]


def test_review_approve_flow(client):
    record = submit_and_wait(client, T01)
    outcome_id = record["id"]

    pending = client.get("/v1/reviews", params={"status": "pending"}).json()
    assert outcome_id in [o["id"] for o in pending]

    resp = client.post(f"/v1/reviews/{outcome_id}/decision",
                       json={"decision": "approve", "reviewer": "sre1"})
    assert resp.status_code == 200
    assert resp.json()["decision"]["decision"] == "approve"

    # approved script is immediately searchable at self-match score 1.0
    search = client.get("/v1/catalogue/search", params={"q": T01, "k": 1}).json()
    assert search["high_confidence"] is True
    assert abs(search["hits"][0]["score"]["total"] - 1.0) <= 1e-9

    # and the decided card left the pending queue
    pending = client.get("/v1/reviews").json()
    assert outcome_id not in [o["id"] for o in pending]


def test_second_decision_conflicts(client):
    record = submit_and_wait(client, T07)
    outcome_id = record["id"]
    first = client.post(f"/v1/reviews/{outcome_id}/decision",
                        json={"decision": "reject", "reviewer": "a"})
    assert first.status_code == 200
    second = client.post(f"/v1/reviews/{outcome_id}/decision",
                         json={"decision": "approve", "reviewer": "b"})
    assert second.status_code == 409
    assert second.json()["code"] == "conflict"


def test_edit_with_unbalanced_quote_reports_findings(client):
    record = submit_and_wait(client, T07)
    outcome_id = record["id"]
    resp = client.post(
        f"/v1/reviews/{outcome_id}/decision",
        json={"decision": "edit", "reviewer": "sre1",
              "edited_script": 'echo "unterminated\n'},
    )
    assert resp.status_code == 400
    findings = resp.json()["detail"]["findings"]
    assert findings and findings[0]["kind"] == "unclosed_quote"
    assert findings[0]["line"] == 1
    # outcome stays pending after the rejected edit
    pending = client.get("/v1/reviews").json()
    assert outcome_id in [o["id"] for o in pending]


def test_edit_round_trips_script_bytes(client):
    record = submit_and_wait(client, T07)
    edited = "ps -eo pid --sort=-%cpu | head -6 | tail -5\n"
    resp = client.post(f"/v1/reviews/{record['id']}/decision",
                       json={"decision": "edit", "reviewer": "sre1",
                             "edited_script": edited})
    assert resp.status_code == 200
    search = client.get("/v1/catalogue/search",
                        params={"q": T07, "k": 1}).json()
    assert search["hits"][0]["script"] == edited


def test_search_matches_library_results(tmp_path):
    catalogue = Catalogue(CatalogueConfig())
    raw = json.loads((FIXTURES / "scoring_catalogue.json").read_text())
    for rec in raw:
        catalogue.add(rec["statement"], BashScript(rec["script"]), created_at="t")
    app = create_app(make_app_cfg(tmp_path), gateway=replay_gateway(),
                     catalogue=catalogue)
    with TestClient(app) as client:
        query = "delete log files older than 14 days"
        api_hits = client.get("/v1/catalogue/search",
                              params={"q": query, "k": 3}).json()["hits"]
        lib_hits = catalogue.retrieve(query, 3).hits
        assert [h["id"] for h in api_hits] == [e.id for e, _ in lib_hits]
        assert [h["score"]["total"] for h in api_hits] == \
            [s.total for _, s in lib_hits]


def test_search_validation_and_empty_catalogue(client):
    assert client.get("/v1/catalogue/search",
                      params={"q": "x", "k": 0}).status_code == 400
    assert client.get("/v1/catalogue/search",
                      params={"q": " ", "k": 1}).status_code == 400
    body = client.get("/v1/catalogue/search", params={"q": "anything"}).json()
    assert body["hits"] == [] and body["high_confidence"] is False


def test_running_placeholder_for_in_flight_outcome(tmp_path):
    release = threading.Event()

    class BlockingBackend:
        id = "default"

        def complete(self, model_id, template_id, prompt, max_tokens, temperature):
            release.wait(timeout=10)
            if template_id == "gen.initial":
                return "```bash\necho ok\n```"
            if template_id == "assess.functionality":
                return "prints ok"
            return "VERDICT: ALIGNED"

    from scriptsmith.gateway import LlmGateway

    gateway = LlmGateway({"default": BlockingBackend()})
    app = create_app(make_app_cfg(tmp_path), gateway=gateway)
    with TestClient(app) as client:
        resp = client.post("/v1/actions", json={"statement": "blocked task"})
        outcome_id = resp.json()["outcome_id"]
        placeholder = client.get(f"/v1/outcomes/{outcome_id}").json()
        assert placeholder == {"id": outcome_id, "status": "running"}
        release.set()
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            record = client.get(f"/v1/outcomes/{outcome_id}").json()
            if record.get("status") != "running":
                break
            time.sleep(0.01)
        assert record["status"] == "needs_review"


def test_bearer_token_required_when_configured(tmp_path, monkeypatch):
    monkeypatch.setenv("SCRIPTSMITH_TEST_TOKEN", "sesame")
    app_cfg = make_app_cfg(tmp_path, auth_token_env="SCRIPTSMITH_TEST_TOKEN")
    app = create_app(app_cfg, gateway=replay_gateway())
    with TestClient(app) as client:
        assert client.get("/v1/reviews").status_code == 400
        ok = client.get("/v1/reviews",
                        headers={"Authorization": "Bearer sesame"})
        assert ok.status_code == 200
        # health stays open for probes
        assert client.get("/v1/health").status_code == 200


def test_static_ui_served_when_built(tmp_path):
    ui_dir = FIXTURES.parent.parent / "frontend" / "dist"
    if not (ui_dir / "index.html").exists():
        pytest.skip("frontend not built")
    app_cfg = make_app_cfg(tmp_path, ui_dir=str(ui_dir))
    app = create_app(app_cfg, gateway=replay_gateway())
    with TestClient(app) as client:
        resp = client.get("/ui/")
        assert resp.status_code == 200
        assert "scriptsmith review" in resp.text
        assert client.get("/ui/app.js").status_code == 200


def test_catalogue_persisted_after_approve(tmp_path):
    app_cfg = make_app_cfg(tmp_path)
    app = create_app(app_cfg, gateway=replay_gateway())
    with TestClient(app) as client:
        record = submit_and_wait(client, T01)
        client.post(f"/v1/reviews/{record['id']}/decision",
                    json={"decision": "approve", "reviewer": "sre1"})
    reloaded = Catalogue.load(app_cfg.catalogue.path)
    assert len(reloaded) == 1
    assert reloaded.entries()[0].key.statement == T01
