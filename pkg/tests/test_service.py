"""HTTP service contract: endpoints, schemas, purity, and zero egress.

The shared ``service_artifacts`` fixture builds a full artifact set
(dataset CSV, model, cards, report) from the synthetic generator, so the
service under test runs the same startup path as production: parse the
dataset, load the model, serve the exported cards verbatim.
"""

from __future__ import annotations

import dataclasses
import json
import socket

import pytest
from fastapi.testclient import TestClient
from jsonschema import Draft202012Validator

from readmit.errors import ConfigError
from readmit.gbdt import Ensemble
from readmit.service import DEFAULT_PAGE_SIZE, ServiceConfig, Store, create_app
from tests.conftest import REPO_ROOT


def _schema(name: str) -> Draft202012Validator:
    return Draft202012Validator(
        json.loads((REPO_ROOT / "docs" / name).read_text()))


@pytest.fixture(scope="module")
def artifacts(service_artifacts):
    return service_artifacts


@pytest.fixture(scope="module")
def client(artifacts):
    service_cfg, _, _ = artifacts
    return TestClient(create_app(service_cfg))


# -- /patients ----------------------------------------------------------------

def test_patients_default_page(client, artifacts):
    _, cards, _ = artifacts
    r = client.get("/patients")
    assert r.status_code == 200
    body = r.json()
    _schema("patients.schema.json").validate(body)
    assert body["page"] == 1
    assert body["page_size"] == DEFAULT_PAGE_SIZE
    assert body["total"] == len(cards)
    assert len(body["items"]) == DEFAULT_PAGE_SIZE
    scores = [item["risk_score"] for item in body["items"]]
    assert scores == sorted(scores, reverse=True)


def test_patients_sorted_by_score_with_id_tiebreak(client):
    body = client.get("/patients", params={"page_size": 500}).json()
    keys = [(-item["risk_score"], item["encounter_id"])
            for item in body["items"]]
    assert keys == sorted(keys)
    assert body["total"] == len(body["items"])


def test_patients_sort_by_id(client):
    body = client.get("/patients", params={"sort": "id", "page_size": 500}).json()
    ids = [item["encounter_id"] for item in body["items"]]
    assert ids == sorted(ids)


def test_patients_pagination_tiles_the_listing(client, artifacts):
    _, cards, _ = artifacts
    seen = []
    page = 1
    while True:
        body = client.get("/patients", params={"page": page,
                                               "page_size": 120}).json()
        if not body["items"]:
            break
        seen.extend(item["encounter_id"] for item in body["items"])
        page += 1
    assert len(seen) == len(cards)
    assert len(set(seen)) == len(cards)


def test_patients_query_validation(client):
    assert client.get("/patients", params={"page": 0}).status_code == 422
    assert client.get("/patients", params={"page_size": 0}).status_code == 422
    assert client.get("/patients", params={"page_size": 501}).status_code == 422
    assert client.get("/patients", params={"sort": "name"}).status_code == 422


# -- /patients/{id}/card --------------------------------------------------------

def test_card_served_verbatim(client, artifacts):
    service_cfg, cards, _ = artifacts
    want = cards[0].to_dict()
    r = client.get(f"/patients/{want['encounter_id']}/card")
    assert r.status_code == 200
    assert r.json() == want
    # and byte-for-byte against the export line
    first_line = open(service_cfg.cards_path).readline()
    assert r.json() == json.loads(first_line)
    _schema("card.schema.json").validate(r.json())


def test_unknown_card_is_404(client):
    r = client.get("/patients/999999999/card")
    assert r.status_code == 404
    assert "999999999" in r.json()["detail"]


# -- /whatif --------------------------------------------------------------------

def test_whatif_identity(client, artifacts):
    _, cards, _ = artifacts
    for card in cards[:10]:
        r = client.post("/whatif", json={"encounter_id": card.encounter_id,
                                         "overrides": {}})
        assert r.status_code == 200
        body = r.json()
        _schema("whatif.schema.json").validate(body)
        assert body["new_score"] == pytest.approx(card.risk_score, abs=1e-12)
        assert body["new_tier"]["tier"] == card.tier.tier
        assert body["direct_overrides"] == []


def test_whatif_inpatient_surge_raises_score(client, artifacts):
    _, cards, _ = artifacts
    card = cards[0]
    r = client.post("/whatif", json={"encounter_id": card.encounter_id,
                                     "overrides": {"number_inpatient": 5}})
    assert r.status_code == 200
    assert r.json()["new_score"] >= card.risk_score


def test_whatif_direct_override_is_flagged(client, artifacts):
    _, cards, _ = artifacts
    card = cards[0]
    r = client.post("/whatif", json={
        "encounter_id": card.encounter_id,
        "overrides": {"a1c_high": 1.0, "number_inpatient": 2}})
    assert r.status_code == 200
    assert r.json()["direct_overrides"] == ["a1c_high"]


def test_whatif_errors(client, artifacts):
    _, cards, _ = artifacts
    known = cards[0].encounter_id
    r = client.post("/whatif", json={"encounter_id": 999999999,
                                     "overrides": {}})
    assert r.status_code == 404
    r = client.post("/whatif", json={"encounter_id": known,
                                     "overrides": {"no_such_feature": 1}})
    assert r.status_code == 422
    r = client.post("/whatif", json={"encounter_id": known,
                                     "overrides": {"number_inpatient": -1}})
    assert r.status_code == 422
    r = client.post("/whatif", json={"encounter_id": known,
                                     "overrides": {"number_inpatient": 1.5}})
    assert r.status_code == 422
    r = client.post("/whatif", json={"overrides": {}})
    assert r.status_code == 422  # body missing encounter_id


def test_whatif_is_pure(client, artifacts):
    _, cards, _ = artifacts
    card = cards[3]
    url = f"/patients/{card.encounter_id}/card"
    before = client.get(url).text
    body = {"encounter_id": card.encounter_id,
            "overrides": {"number_inpatient": 4}}
    first = client.post("/whatif", json=body).text
    second = client.post("/whatif", json=body).text
    assert first == second
    assert client.get(url).text == before


# -- /model/metrics ---------------------------------------------------------------

def test_model_metrics_matches_report(client, artifacts):
    _, _, report = artifacts
    r = client.get("/model/metrics")
    assert r.status_code == 200
    body = r.json()
    _schema("metrics.schema.json").validate(body)
    assert body["report"] == report.scalars()
    assert body["config"]["max_depth"] == 3
    assert body["config"]["stamp"] == "2026-08-17T00:00:00Z"


def test_model_metrics_404_without_report(artifacts):
    service_cfg, _, _ = artifacts
    bare = dataclasses.replace(service_cfg, report_path=None)
    with TestClient(create_app(bare)) as c:
        assert c.get("/model/metrics").status_code == 404


# -- startup and configuration ------------------------------------------------------

def test_everything_503_before_load(artifacts):
    service_cfg, cards, _ = artifacts
    app = create_app(service_cfg, eager=False)
    with TestClient(app) as c:
        assert c.get("/patients").status_code == 503
        assert c.get(f"/patients/{cards[0].encounter_id}/card").status_code == 503
        assert c.post("/whatif", json={"encounter_id": 1,
                                       "overrides": {}}).status_code == 503
        assert c.get("/model/metrics").status_code == 503
        app.state.load()
        assert c.get("/patients").status_code == 200


def test_missing_artifact_files_fail_startup(artifacts, tmp_path):
    service_cfg, _, _ = artifacts
    broken = dataclasses.replace(service_cfg, model_path=str(tmp_path / "nope.txt"))
    with pytest.raises(ConfigError, match="nope.txt"):
        Store(broken)


def test_registry_fingerprint_mismatch_fails_startup(artifacts, tmp_path):
    service_cfg, _, _ = artifacts
    model = Ensemble.load(service_cfg.model_path)
    model.registry_fingerprint = "0" * 64
    tampered = tmp_path / "model.txt"
    model.save(tampered)
    broken = dataclasses.replace(service_cfg, model_path=str(tampered))
    with pytest.raises(ConfigError, match="registry"):
        Store(broken)


def test_empty_card_set_serves_empty_list(artifacts, tmp_path):
    service_cfg, _, _ = artifacts
    empty = tmp_path / "cards.ndjson"
    empty.write_text("")
    cfg = dataclasses.replace(service_cfg, cards_path=str(empty))
    with TestClient(create_app(cfg)) as c:
        body = c.get("/patients").json()
        assert body["total"] == 0
        assert body["items"] == []


def test_service_config_file_round_trip(artifacts, tmp_path):
    service_cfg, _, _ = artifacts
    path = tmp_path / "service.json"
    path.write_text(json.dumps({
        "model_path": service_cfg.model_path,
        "cards_path": service_cfg.cards_path,
        "dataset_path": service_cfg.dataset_path,
        "port": 9000,
    }))
    loaded = ServiceConfig.from_file(path)
    assert loaded.port == 9000
    assert loaded.model_path == service_cfg.model_path

    path.write_text(json.dumps({"model_path": "m", "cards_path": "c",
                                "dataset_path": "d", "bogus": 1}))
    with pytest.raises(ConfigError, match="bogus"):
        ServiceConfig.from_file(path)
    path.write_text(json.dumps({"model_path": "m"}))
    with pytest.raises(ConfigError, match="missing"):
        ServiceConfig.from_file(path)
    path.write_text("{broken")
    with pytest.raises(ConfigError, match="JSON"):
        ServiceConfig.from_file(path)


def test_ui_mount_serves_static_files(artifacts, tmp_path):
    service_cfg, _, _ = artifacts
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>cards</title>")
    cfg = dataclasses.replace(service_cfg, ui_dir=str(ui))
    with TestClient(create_app(cfg)) as c:
        r = c.get("/ui/")
        assert r.status_code == 200
        assert "cards" in r.text


def test_no_network_egress_during_full_sweep(artifacts, monkeypatch):
    service_cfg, cards, _ = artifacts
    attempts = []

    def spy_connect(self, address):
        attempts.append(address)
        raise AssertionError(f"unexpected egress to {address}")

    def spy_create_connection(address, *a, **kw):
        attempts.append(address)
        raise AssertionError(f"unexpected egress to {address}")

    monkeypatch.setattr(socket.socket, "connect", spy_connect)
    monkeypatch.setattr(socket, "create_connection", spy_create_connection)

    with TestClient(create_app(service_cfg)) as c:
        c.get("/patients")
        c.get(f"/patients/{cards[0].encounter_id}/card")
        c.post("/whatif", json={"encounter_id": cards[0].encounter_id,
                                "overrides": {"number_inpatient": 3}})
        c.get("/model/metrics")
    assert attempts == []
