"""Local HTTP service for the review workflows.

Endpoints (all JSON bodies, UTF-8):

    GET  /taxonomy                        hierarchy + annotation enums
    GET  /errors?offset&limit             review queue page
    GET  /audio/{sound_id}                WAV bytes, supports Range
    POST /errors/{sound_id}/annotation    error-category judgment
    GET  /report/errors                   per-category tallies
    POST /annotations                     class annotation with confidence
    GET  /annotations/{sound_id}          class annotations for one sound

When built UI assets are supplied, unmatched GET paths are served from
that directory so the browser app and the API share one origin.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Sequence
from urllib.parse import parse_qs, urlparse

from broadsound.dataset import CONFIDENCE_LEVELS, DatasetManifest
from broadsound.errors import BroadsoundError, DataError
from broadsound.review.store import ERROR_CATEGORIES, AnnotationStore
from broadsound.taxonomy import Level, Taxonomy

_RANGE_RE = re.compile(r"bytes=(\d*)-(\d*)$")


class ReviewService:
    """Holds the loaded queue, manifest, taxonomy, and journal store."""

    def __init__(
        self,
        queue: Sequence[dict],
        manifest: DatasetManifest,
        store: AnnotationStore,
        taxonomy: Taxonomy,
        audio_root: str | Path = ".",
        ui_dir: str | Path | None = None,
    ):
        self.queue = list(queue)
        self.queue_ids = {e["sound_id"] for e in self.queue}
        self.manifest = manifest
        self.store = store
        self.taxonomy = taxonomy
        self.audio_root = Path(audio_root)
        self.ui_dir = Path(ui_dir) if ui_dir is not None else None
        self._manifest_ids = {r.sound_id: r for r in manifest.records}

    # ---- route implementations -------------------------------------------

    def taxonomy_doc(self) -> dict:
        return {
            "version": self.taxonomy.version,
            "top": [
                {
                    "code": top.code,
                    "name": top.name,
                    "children": [
                        {"code": c.code, "name": c.name}
                        for c in self.taxonomy.children_of(top.code)
                    ],
                }
                for top in self.taxonomy.top_nodes
            ],
            "error_categories": list(ERROR_CATEGORIES),
            "confidence_levels": list(CONFIDENCE_LEVELS),
        }

    def errors_page(self, offset: int, limit: int) -> dict:
        if offset < 0 or limit < 1:
            raise DataError("offset must be >= 0 and limit >= 1")
        items = []
        for entry in self.queue[offset : offset + limit]:
            latest = self.store.latest_error(entry["sound_id"])
            doc = dict(entry)
            rec = self._manifest_ids.get(entry["sound_id"])
            if rec is not None:
                doc.setdefault("title", rec.title)
                doc.setdefault("tags", list(rec.tags) if rec.tags else None)
            doc["annotation"] = (
                {
                    "category": latest.category,
                    "reviewer": latest.reviewer,
                    "note": latest.note,
                    "revision": latest.revision,
                }
                if latest
                else None
            )
            items.append(doc)
        return {
            "total": len(self.queue),
            "offset": offset,
            "limit": limit,
            "items": items,
        }

    def record_error(self, sound_id: str, body: dict) -> dict:
        if sound_id not in self.queue_ids:
            raise KeyError(sound_id)
        category = body.get("category")
        reviewer = body.get("reviewer")
        if not isinstance(reviewer, str) or not reviewer:
            raise DataError("'reviewer' is required")
        note = body.get("note")
        rev = self.store.record_error(sound_id, category, reviewer, note)
        return {"revision": rev, "sound_id": sound_id}

    def record_class(self, body: dict) -> dict:
        sound_id = body.get("sound_id")
        if sound_id not in self._manifest_ids:
            raise KeyError(sound_id)
        class_code = body.get("class_code")
        second_codes = set(self.taxonomy.codes(Level.SECOND))
        if class_code not in second_codes:
            raise DataError(f"invalid class_code {class_code!r}")
        annotator = body.get("annotator")
        if not isinstance(annotator, str) or not annotator:
            raise DataError("'annotator' is required")
        rev = self.store.record_class(
            sound_id, class_code, body.get("confidence"), annotator
        )
        return {"revision": rev, "sound_id": sound_id}

    def class_annotations(self, sound_id: str) -> dict:
        if sound_id not in self._manifest_ids:
            raise KeyError(sound_id)
        anns = self.store.class_annotations_for(sound_id)
        latest = self.store.latest_class(sound_id)
        as_doc = lambda a: {
            "class_code": a.class_code,
            "confidence": a.confidence,
            "annotator": a.annotator,
            "revision": a.revision,
        }
        return {
            "sound_id": sound_id,
            "latest": as_doc(latest) if latest else None,
            "annotations": [as_doc(a) for a in anns],
        }

    def audio_file(self, sound_id: str) -> Path:
        rec = self._manifest_ids.get(sound_id)
        if rec is None or rec.audio_path is None:
            raise KeyError(sound_id)
        path = self.audio_root / rec.audio_path
        if not path.is_file():
            raise KeyError(sound_id)
        return path

    def make_server(self, bind: str) -> ThreadingHTTPServer:
        host, _, port = bind.rpartition(":")
        handler = _make_handler(self)
        try:
            server = ThreadingHTTPServer((host or "127.0.0.1", int(port)), handler)
        except OSError as exc:
            raise DataError(f"cannot bind {bind}: {exc}") from exc
        server.daemon_threads = True
        return server

    def serve_forever(self, bind: str) -> None:
        server = self.make_server(bind)
        stop = threading.Event()

        def shutdown(*_):
            stop.set()
            threading.Thread(target=server.shutdown, daemon=True).start()

        import signal

        signal.signal(signal.SIGTERM, shutdown)
        signal.signal(signal.SIGINT, shutdown)
        try:
            server.serve_forever()
        finally:
            server.server_close()
            self.store.close()


def _make_handler(svc: ReviewService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        # -- helpers --------------------------------------------------------

        def send_response(self, code, message=None):
            super().send_response(code, message)
            # the UI may be served from a dev server on another port
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header(
                "Access-Control-Expose-Headers", "Content-Range, Accept-Ranges"
            )

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type, Range")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def _send_json(self, doc, status=200):
            payload = json.dumps(doc, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def _send_error_json(self, status, message):
            self._send_json({"error": message}, status=status)

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if not raw:
                raise DataError("empty request body")
            try:
                doc = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise DataError(f"invalid JSON body: {exc}") from exc
            if not isinstance(doc, dict):
                raise DataError("request body must be a JSON object")
            return doc

        def _serve_file_bytes(self, path: Path, content_type: str):
            data = path.read_bytes()
            size = len(data)
            range_header = self.headers.get("Range")
            if range_header:
                m = _RANGE_RE.match(range_header.strip())
                start = end = None
                if m and (m.group(1) or m.group(2)):
                    if m.group(1):
                        start = int(m.group(1))
                        end = int(m.group(2)) if m.group(2) else size - 1
                    else:  # suffix range: last N bytes
                        n = int(m.group(2))
                        start = max(0, size - n)
                        end = size - 1
                if start is None or start >= size or end < start:
                    self.send_response(416)
                    self.send_header("Content-Range", f"bytes */{size}")
                    self.send_header("Content-Length", "0")
                    self.end_headers()
                    return
                end = min(end, size - 1)
                chunk = data[start : end + 1]
                self.send_response(206)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Range", f"bytes {start}-{end}/{size}")
                self.send_header("Accept-Ranges", "bytes")
                self.send_header("Content-Length", str(len(chunk)))
                self.end_headers()
                self.wfile.write(chunk)
                return
            self.send_response(200)
            self.send_header("Content-Type", content_type)
            self.send_header("Accept-Ranges", "bytes")
            self.send_header("Content-Length", str(size))
            self.end_headers()
            self.wfile.write(data)

        def _serve_ui(self, path: str) -> bool:
            if svc.ui_dir is None:
                return False
            rel = path.lstrip("/") or "index.html"
            target = (svc.ui_dir / rel).resolve()
            if not str(target).startswith(str(svc.ui_dir.resolve())) or not target.is_file():
                return False
            ctype = {
                ".html": "text/html; charset=utf-8",
                ".js": "text/javascript; charset=utf-8",
                ".css": "text/css; charset=utf-8",
                ".map": "application/json; charset=utf-8",
            }.get(target.suffix, "application/octet-stream")
            self._serve_file_bytes(target, ctype)
            return True

        # -- verbs ----------------------------------------------------------

        def do_GET(self):
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            try:
                if url.path == "/taxonomy":
                    return self._send_json(svc.taxonomy_doc())
                if url.path == "/errors":
                    qs = parse_qs(url.query)
                    offset = int(qs.get("offset", ["0"])[0])
                    limit = int(qs.get("limit", [str(max(1, len(svc.queue)))])[0])
                    return self._send_json(svc.errors_page(offset, limit))
                if url.path == "/report/errors":
                    return self._send_json(svc.store.error_report())
                if len(parts) == 2 and parts[0] == "audio":
                    try:
                        path = svc.audio_file(parts[1])
                    except KeyError:
                        return self._send_error_json(404, f"no audio for {parts[1]!r}")
                    return self._serve_file_bytes(path, "audio/x-wav")
                if len(parts) == 2 and parts[0] == "annotations":
                    try:
                        return self._send_json(svc.class_annotations(parts[1]))
                    except KeyError:
                        return self._send_error_json(404, f"unknown sound {parts[1]!r}")
                if self._serve_ui(url.path):
                    return
                return self._send_error_json(404, f"no such resource {url.path!r}")
            except (DataError, ValueError) as exc:
                return self._send_error_json(400, str(exc))
            except BroadsoundError as exc:
                return self._send_error_json(500, str(exc))

        def do_POST(self):
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            try:
                if len(parts) == 3 and parts[0] == "errors" and parts[2] == "annotation":
                    body = self._read_body()
                    try:
                        return self._send_json(svc.record_error(parts[1], body), status=201)
                    except KeyError:
                        return self._send_error_json(
                            404, f"sound {parts[1]!r} is not in the review queue"
                        )
                if url.path == "/annotations":
                    body = self._read_body()
                    try:
                        return self._send_json(svc.record_class(body), status=201)
                    except KeyError as exc:
                        return self._send_error_json(
                            404, f"unknown sound {exc.args[0]!r}"
                        )
                return self._send_error_json(404, f"no such resource {url.path!r}")
            except DataError as exc:
                return self._send_error_json(400, str(exc))
            except BroadsoundError as exc:
                return self._send_error_json(500, str(exc))

    return Handler
