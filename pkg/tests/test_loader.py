from __future__ import annotations

import pytest
import requests

from smartetl.dcterms import map_record
from smartetl.errors import AuthError, InvalidItem
from smartetl.loader import (
    ClientConfig,
    LoadLedger,
    OmekaClient,
    check_item,
    fingerprint,
    load_plan,
    payload_hash,
    wire_errors,
    wire_payload,
)

from .conftest import make_record


def _items(n=10, **kw):
    return [map_record(make_record(f"Tool {i}", catalog="ADESTICV2", page=i + 1, **kw)) for i in range(n)]


def _client(stub, **kw):
    return OmekaClient(ClientConfig(stub.url, backoff=0.0, **kw), sleep=lambda s: None)


def test_second_run_is_all_skips(stub, tmp_path):
    ledger_path = tmp_path / "ledger.json"
    items = _items()
    first = load_plan(items, _client(stub), LoadLedger(ledger_path))
    assert first.counts == {"Created": 10}
    assert len(stub.items) == 10 and len(stub.collections) == 1
    stub.clear_log()
    second = load_plan(items, _client(stub), LoadLedger(ledger_path))
    assert second.counts == {"Skipped": 10}
    assert stub.mutating_requests() == []


def test_changed_item_is_updated_in_place(stub, tmp_path):
    ledger = LoadLedger(tmp_path / "l.json")
    (item,) = _items(1)
    load_plan([item], _client(stub), ledger)
    (changed,) = _items(1, language="en")
    changed.properties["Description"] = [("A new description.", False)]
    report = load_plan([changed], _client(stub), ledger)
    assert report.counts == {"Updated": 1}
    (stored,) = stub.items.values()
    assert {"element": {"name": "Description"}, "text": "A new description.", "html": False} in stored["element_texts"]


def test_item_deleted_remotely_is_recreated(stub, tmp_path):
    ledger = LoadLedger(tmp_path / "l.json")
    (item,) = _items(1)
    load_plan([item], _client(stub), ledger)
    stub.items.clear()
    item.properties["Description"] = [("Edited.", False)]
    assert load_plan([item], _client(stub), ledger).counts == {"Recreated": 1}
    assert len(stub.items) == 1


def test_two_collections_rejected_before_any_request(stub, tmp_path):
    (item,) = _items(1)
    item.collection = ["SpanishSTT", "EUPractice"]
    with pytest.raises(InvalidItem):
        check_item(item)
    report = load_plan([item], _client(stub), LoadLedger())
    assert report.counts == {"Rejected": 1}
    assert stub.log == []


def test_attachments_are_uploaded(stub):
    (item,) = _items(1, producer_logo="img:logo")
    client = OmekaClient(ClientConfig(stub.url), assets={"img:logo": b"\x89PNG"})
    load_plan([item], client, LoadLedger())
    (f,) = stub.files.values()
    assert f["filename"] == "img_logo.png" and f["item"]["id"] in stub.items


def test_transient_server_errors_are_retried(stub):
    stub.fail_next(2, 503)
    report = load_plan(_items(1), _client(stub), LoadLedger())
    assert report.counts == {"Created": 1}


def test_persistent_server_errors_fail_the_item_only(stub):
    items = _items(2)
    stub.fail_next(3, 500)
    report = load_plan(items, _client(stub), LoadLedger())
    assert [o["action"] for o in report.outcomes] == ["Failed", "Created"]


def test_wrong_key_is_an_auth_error(stub, monkeypatch):
    monkeypatch.setenv("OMEKA_API_KEY", "wrong")
    with pytest.raises(AuthError):
        _client(stub).ensure_collection("SpanishSTT")
    report = load_plan(_items(1), _client(stub), LoadLedger())
    assert report.counts == {"Failed": 1}


def test_missing_key_env(stub, monkeypatch):
    monkeypatch.delenv("OMEKA_API_KEY")
    with pytest.raises(AuthError):
        _client(stub).ensure_collection("SpanishSTT")


def test_key_may_travel_in_header(stub):
    assert load_plan(_items(1), _client(stub, key_mode="header"), LoadLedger()).counts == {"Created": 1}


def test_dry_run_touches_nothing(stub, tmp_path):
    ledger = LoadLedger(tmp_path / "l.json")
    report = load_plan(_items(3), _client(stub, dry_run=True), ledger)
    assert report.counts == {"WouldCreate": 3}
    assert stub.mutating_requests() == [] and ledger.rows == {}


def test_key_never_in_config():
    with pytest.raises(ValueError):
        ClientConfig.from_dict({"base_url": "http://x", "api_key": "secret"})


def test_fingerprint_is_identity_payload_hash_is_content():
    a, b = _items(1), _items(1)
    b[0].properties["Description"] = [("Other.", False)]
    assert fingerprint(a[0]) == fingerprint(b[0])
    assert payload_hash(a[0]) != payload_hash(b[0])


def test_wire_payload_passes_stub_schema():
    (item,) = _items(1)
    assert wire_errors(wire_payload(item, 1)) == []
    assert wire_errors({"collection": {"id": 1}, "element_texts": [], "extra": 1})
    assert wire_errors({"collection": [{"id": 1}, {"id": 2}], "element_texts": [{}]})


def test_stub_rejects_malformed_items(stub):
    r = requests.post(stub.url + "/api/items", params={"key": "stub-key"},
                      json={"collection": {"id": 99}, "element_texts": [{"element": {"name": "Title"},
                                                                          "text": "x", "html": False}]})
    assert r.status_code == 400
    assert requests.post(stub.url + "/api/items", json={}).status_code == 401


def test_ledger_survives_reload(tmp_path):
    led = LoadLedger(tmp_path / "l.json")
    led.put("fp", 3, 1, "h")
    assert LoadLedger(tmp_path / "l.json").get("fp") == {"item_id": 3, "collection_id": 1, "payload_hash": "h"}
