"""In-process stand-in for an Omeka-style collections REST API.

Serves ``/api/collections``, ``/api/items`` and ``/api/files`` from memory,
enforces the wire schema and API-key auth on mutating requests, and keeps
a request log readable at ``/_requests`` for assertions.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

MUTATING = {"POST", "PUT", "PATCH", "DELETE"}


def wire_errors(body) -> list[str]:
    """Violations of the item wire schema (empty when valid)."""
    if not isinstance(body, dict):
        return ["body must be an object"]
    errs = []
    if set(body) != {"collection", "element_texts"}:
        errs.append(f"keys must be exactly collection, element_texts (got {sorted(body)})")
    col = body.get("collection")
    if not (isinstance(col, dict) and set(col) == {"id"} and isinstance(col.get("id"), int)):
        errs.append("collection must be {\"id\": <int>}")
    texts = body.get("element_texts")
    if not isinstance(texts, list) or not texts:
        errs.append("element_texts must be a non-empty list")
    else:
        for i, et in enumerate(texts):
            ok = (isinstance(et, dict) and set(et) == {"element", "text", "html"}
                  and isinstance(et["element"], dict) and set(et["element"]) == {"name"}
                  and isinstance(et["element"]["name"], str) and isinstance(et["text"], str)
                  and isinstance(et["html"], bool))
            if not ok:
                errs.append(f"element_texts[{i}] malformed")
    return errs


class StubServer:
    def __init__(self, api_key: str = "stub-key", host: str = "127.0.0.1", port: int = 0):
        self.api_key = api_key
        self.collections: dict = {}
        self.items: dict = {}
        self.files: dict = {}
        self.log: list = []
        self._ids = 0
        self._failures: list = []  # statuses to return for the next mutating requests
        self._lock = threading.Lock()
        self.httpd = ThreadingHTTPServer((host, port), self._handler())
        self.thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "StubServer":
        self.thread = threading.Thread(target=self.httpd.serve_forever, args=(0.05,), daemon=True)
        self.thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def fail_next(self, count: int = 1, status: int = 500) -> None:
        with self._lock:
            self._failures.extend([status] * count)

    def mutating_requests(self) -> list:
        return [r for r in self.log if r["method"] in MUTATING]

    def clear_log(self) -> None:
        with self._lock:
            self.log.clear()

    def _next_id(self) -> int:
        self._ids += 1
        return self._ids

    # ------------------------------------------------------------ dispatch
    def handle(self, method: str, path: str, query: dict, headers, body):
        parts = [p for p in path.split("/") if p]
        key = query.get("key", [None])[0] or headers.get("X-Api-Key")
        if method in MUTATING:
            if key is None:
                return 401, {"errors": [{"message": "API key required"}]}
            if key != self.api_key:
                return 403, {"errors": [{"message": "Invalid key"}]}
            if self._failures:
                return self._failures.pop(0), {"errors": [{"message": "injected failure"}]}
        if parts[:1] != ["api"] or len(parts) < 2:
            return 404, {"errors": [{"message": "not found"}]}
        resource, rid = parts[1], (int(parts[2]) if len(parts) > 2 and parts[2].isdigit() else None)
        store = {"collections": self.collections, "items": self.items, "files": self.files}.get(resource)
        if store is None:
            return 404, {"errors": [{"message": f"unknown resource {resource}"}]}

        if method == "GET":
            if rid is None:
                rows = list(store.values())
                if resource == "items" and "collection" in query:
                    cid = int(query["collection"][0])
                    rows = [r for r in rows if r["collection"]["id"] == cid]
                return 200, rows
            return (200, store[rid]) if rid in store else (404, {"errors": [{"message": "no such record"}]})

        if method == "DELETE":
            if rid not in store:
                return 404, {"errors": [{"message": "no such record"}]}
            del store[rid]
            return 204, None

        if resource == "collections":
            texts = body.get("element_texts") if isinstance(body, dict) else None
            if not isinstance(texts, list) or set(body) != {"element_texts"}:
                return 400, {"errors": [{"message": "collection needs element_texts only"}]}
            new = {"id": self._next_id(), "element_texts": texts}
            self.collections[new["id"]] = new
            return 201, new

        if resource == "files":
            ok = (isinstance(body, dict) and set(body) == {"item", "filename", "content_base64"}
                  and isinstance(body["item"], dict) and body["item"].get("id") in self.items)
            if not ok:
                return 400, {"errors": [{"message": "file needs item, filename, content_base64"}]}
            new = dict(body, id=self._next_id())
            self.files[new["id"]] = new
            return 201, {"id": new["id"], "item": body["item"], "filename": body["filename"]}

        errs = wire_errors(body)
        if not errs and body["collection"]["id"] not in self.collections:
            errs = [f"collection {body['collection']['id']} does not exist"]
        if errs:
            return 400, {"errors": [{"message": e} for e in errs]}
        if method == "POST" and rid is None:
            new = dict(body, id=self._next_id())
            self.items[new["id"]] = new
            return 201, new
        if method in ("PUT", "PATCH") and rid is not None:
            if rid not in self.items:
                return 404, {"errors": [{"message": "no such record"}]}
            self.items[rid] = dict(body, id=rid)
            return 200, self.items[rid]
        return 405, {"errors": [{"message": "method not allowed"}]}

    def _handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output quiet
                pass

            def _serve(self):
                url = urlparse(self.path)
                if url.path == "/_requests":
                    return self._send(200, list(server.log))
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length) if length else b""
                try:
                    body = json.loads(raw) if raw else None
                except json.JSONDecodeError:
                    return self._send(400, {"errors": [{"message": "invalid JSON"}]})
                with server._lock:
                    server.log.append({"method": self.command, "path": url.path})
                    status, payload = server.handle(self.command, url.path, parse_qs(url.query),
                                                    self.headers, body)
                self._send(status, payload)

            def _send(self, status, payload):
                data = b"" if payload is None else json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            do_GET = do_POST = do_PUT = do_PATCH = do_DELETE = _serve

        return Handler
