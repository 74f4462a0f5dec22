"""Idempotent loading of DCTERMS items into an Omeka-style REST API.

Wire format of an item (POST /api/items, PUT /api/items/<id>)::

    {"collection": {"id": N},
     "element_texts": [{"element": {"name": "<property>"}, "text": "...", "html": false}, ...]}

A local ledger maps each item's identity (collection + source record) to
its remote id and the hash of the last payload sent, so an unchanged item
is skipped without touching the network.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from ..dcterms import DCTermsItem
from ..errors import AuthError, ConflictError, HttpError, InvalidItem, SmartETLError
from ..records import canonical_json

log = logging.getLogger(__name__)


@dataclass
class ClientConfig:
    base_url: str
    api_key_env: str = "OMEKA_API_KEY"
    timeout: float = 10.0
    dry_run: bool = False
    key_mode: str = "query"  # query: ?key=...; header: X-Api-Key
    max_attempts: int = 3
    backoff: float = 0.5

    @classmethod
    def from_dict(cls, d: dict) -> "ClientConfig":
        if "api_key" in d or "key" in d:
            raise ValueError("the API key goes in the environment variable named by api_key_env")
        return cls(**d)


class LoadLedger:
    """fingerprint -> {item_id, collection_id, payload_hash}; saved atomically per change."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.rows: dict = {}
        if self.path and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                self.rows = json.load(fh)

    def get(self, fp: str):
        return self.rows.get(fp)

    def put(self, fp: str, item_id: int, collection_id: int, payload_hash: str) -> None:
        self.rows[fp] = {"item_id": item_id, "collection_id": collection_id, "payload_hash": payload_hash}
        self.save()

    def save(self) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".ledger-")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(self.rows, fh, indent=2, sort_keys=True)
        os.replace(tmp, self.path)


def fingerprint(item: DCTermsItem) -> str:
    """Identity of an item: its collection and source record, not its content."""
    ident = {"collection": item.collection, "record": item.provenance.get("record_id")}
    return hashlib.sha256(canonical_json(ident).encode("utf-8")).hexdigest()


def wire_payload(item: DCTermsItem, collection_id: int) -> dict:
    return {
        "collection": {"id": collection_id},
        "element_texts": [{"element": {"name": p}, "text": v, "html": h}
                          for p, vals in item.properties.items() for v, h in vals],
    }


def payload_hash(item: DCTermsItem) -> str:
    body = {"payload": wire_payload(item, 0), "attachments": item.attachments}
    return hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()


def check_item(item: DCTermsItem) -> None:
    if isinstance(item.collection, (list, tuple, set)):
        raise InvalidItem(f"item {item.provenance.get('record_id')} names {len(item.collection)} "
                          "collections; an item belongs to exactly one")
    try:
        item.validate()
    except SmartETLError as exc:
        raise InvalidItem(str(exc)) from exc


class OmekaClient:
    def __init__(self, config: ClientConfig, session=None, sleep=time.sleep, assets: dict | None = None):
        self.config = config
        self.session = session or requests.Session()
        self.sleep = sleep
        self.assets = assets or {}  # attachment ref -> bytes
        self._collections: dict = {}

    def _key(self) -> str:
        key = os.environ.get(self.config.api_key_env)
        if not key:
            raise AuthError(f"environment variable {self.config.api_key_env} holds no API key")
        return key

    def request(self, method: str, path: str, body=None, params=None):
        mutating = method != "GET"
        params, headers = dict(params or {}), {}
        if mutating:
            key = self._key()
            if self.config.key_mode == "header":
                headers["X-Api-Key"] = key
            else:
                params["key"] = key
        url = self.config.base_url.rstrip("/") + path
        last = None
        for attempt in range(self.config.max_attempts):
            if attempt:
                self.sleep(self.config.backoff * 2 ** (attempt - 1))
            try:
                resp = self.session.request(method, url, json=body, params=params, headers=headers,
                                            timeout=self.config.timeout)
            except requests.RequestException as exc:
                last = HttpError(f"{method} {path}: {exc}")
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"{method} {path}: HTTP {resp.status_code}")
            if resp.status_code >= 500:
                last = HttpError(f"{method} {path}: HTTP {resp.status_code}", resp.status_code)
                continue
            if resp.status_code == 404:
                raise ConflictError(f"{method} {path}: not found", 404)
            if resp.status_code >= 400:
                raise HttpError(f"{method} {path}: HTTP {resp.status_code} {resp.text[:200]}", resp.status_code)
            return resp.json() if resp.content else None
        raise last

    # ------------------------------------------------------------ collections
    def find_collection(self, name: str):
        if name in self._collections:
            return self._collections[name]
        for c in self.request("GET", "/api/collections") or []:
            for et in c.get("element_texts", []):
                if et.get("element", {}).get("name") == "Title" and et.get("text") == name:
                    self._collections[name] = c["id"]
                    return c["id"]
        return None

    def ensure_collection(self, name: str):
        """Id of the collection titled ``name``, creating it if needed (None in dry-run)."""
        cid = self.find_collection(name)
        if cid is not None or self.config.dry_run:
            return cid
        body = {"element_texts": [{"element": {"name": "Title"}, "text": name, "html": False}]}
        cid = self.request("POST", "/api/collections", body)["id"]
        self._collections[name] = cid
        return cid

    # ------------------------------------------------------------ items
    def _upload(self, item_id: int, refs) -> None:
        for ref in refs:
            data = self.assets.get(ref)
            if data is None:
                log.warning("attachment %s has no bytes; skipped", ref)
                continue
            self.request("POST", "/api/files", {
                "item": {"id": item_id}, "filename": f"{ref.replace(':', '_')}.png",
                "content_base64": base64.b64encode(data).decode("ascii"),
            })

    def upsert_item(self, item: DCTermsItem, ledger: LoadLedger) -> tuple:
        check_item(item)
        fp, ph = fingerprint(item), payload_hash(item)
        row = ledger.get(fp)
        if row is not None and row["payload_hash"] == ph:
            return row["item_id"], "Skipped"
        if self.config.dry_run:
            return (row or {}).get("item_id"), "WouldUpdate" if row else "WouldCreate"
        cid = self.ensure_collection(item.collection)
        body = wire_payload(item, cid)
        if row is not None:
            try:
                self.request("PUT", f"/api/items/{row['item_id']}", body)
                ledger.put(fp, row["item_id"], cid, ph)
                return row["item_id"], "Updated"
            except ConflictError:
                log.warning("remote item %s vanished; recreating", row["item_id"])
                action = "Recreated"
        else:
            action = "Created"
        item_id = self.request("POST", "/api/items", body)["id"]
        ledger.put(fp, item_id, cid, ph)
        self._upload(item_id, item.attachments)
        return item_id, action


@dataclass
class LoadReport:
    outcomes: list = field(default_factory=list)  # {record_id, action, item_id, error}

    @property
    def counts(self) -> dict:
        out: dict = {}
        for o in self.outcomes:
            out[o["action"]] = out.get(o["action"], 0) + 1
        return dict(sorted(out.items()))

    def to_dict(self) -> dict:
        return {"counts": self.counts, "outcomes": self.outcomes}


def load_plan(items, client: OmekaClient, ledger: LoadLedger) -> LoadReport:
    """Upsert every item; a failing item is reported and the batch goes on."""
    report = LoadReport()
    for item in items:
        rid = item.provenance.get("record_id")
        try:
            item_id, action = client.upsert_item(item, ledger)
            report.outcomes.append({"record_id": rid, "action": action, "item_id": item_id, "error": ""})
        except InvalidItem as exc:
            report.outcomes.append({"record_id": rid, "action": "Rejected", "item_id": None, "error": str(exc)})
        except (AuthError, HttpError) as exc:
            report.outcomes.append({"record_id": rid, "action": "Failed", "item_id": None, "error": str(exc)})
    log.info("load: %s", report.counts)
    return report
