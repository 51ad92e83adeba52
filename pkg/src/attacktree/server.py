"""Minimal HTTP API serving generated DAGs and accepting overlay updates
for the review client.

Endpoints:
    GET  /tree/{feared_event_id}    merged DAG + annotations + orphans
    GET  /report/{feared_event_id}  latest generation/regeneration report
    PUT  /annotation/{path}         record an expert decision (single writer)
    POST /regenerate                reload the architecture file, regenerate

Reads are concurrent; overlay writes are serialized through one lock and
persisted atomically, and a write arriving while another is in flight gets
a 409.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import unquote

from .bundle import ARCHITECTURE_FILE, ProjectBundle, load_bundle, load_model, save_overlay
from .dag import Annotation, AttackDag, merge_annotations
from .errors import AttackTreeError
from .generate import generate
from .maintain import regenerate


class AppState:
    """Loaded bundle plus the current DAG and report per feared event."""

    def __init__(self, bundle: ProjectBundle):
        self.bundle = bundle
        self.dags: dict[str, AttackDag] = {}
        self.reports: dict[str, dict] = {}
        self.write_lock = threading.Lock()
        self.state_lock = threading.Lock()
        for fe in bundle.study.feared_events:
            dag = generate(fe, bundle.model, bundle.study, bundle.kb, bundle.config)
            self.dags[fe.id] = dag
            self.reports[fe.id] = {
                "feared_event": fe.id,
                "node_count": len(dag.nodes),
                "edge_count": len(dag.edges()),
            }

    def tree_view(self, fe_id: str) -> dict | None:
        dag = self.dags.get(fe_id)
        if dag is None:
            return None
        doc, orphans = merge_annotations(dag, self.bundle.overlay)
        doc["orphaned_annotations"] = orphans
        return doc

    def annotate(self, path: str, annotation: Annotation) -> bool:
        if not any(path in dag.nodes for dag in self.dags.values()):
            return False
        self.bundle.overlay[path] = annotation
        save_overlay(self.bundle.overlay_path, self.bundle.overlay)
        return True

    def regenerate_all(self, fe_id: str | None = None) -> dict:
        """Reload the architecture file and regenerate against the current
        DAGs; returns the report(s)."""
        new_model = load_model(self.bundle.root / ARCHITECTURE_FILE)
        reports: dict[str, dict] = {}
        with self.state_lock:
            self.bundle.model = new_model
            targets = ([fe_id] if fe_id is not None
                       else [fe.id for fe in self.bundle.study.feared_events])
            for target in targets:
                fe = self.bundle.study.feared_event(target)
                old_dag = self.dags[target]
                new_dag, report = regenerate(
                    fe, new_model, self.bundle.study, self.bundle.kb,
                    self.bundle.config, old_dag, self.bundle.overlay)
                self.dags[target] = new_dag
                self.reports[target] = report.to_dict()
                reports[target] = self.reports[target]
        if fe_id is not None:
            return reports[fe_id]
        return {"reports": reports}


class _Handler(BaseHTTPRequestHandler):
    state: AppState
    ui_dir: Path | None = None

    # -- plumbing ------------------------------------------------------------

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, code: int, payload: dict | bytes,
              content_type: str = "application/json") -> None:
        body = payload if isinstance(payload, bytes) else \
            (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, message: str) -> None:
        self._send(code, {"error": message})

    def _read_body(self) -> dict | None:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError:
            return None
        return doc if isinstance(doc, dict) else None

    # -- routes ---------------------------------------------------------------

    def do_OPTIONS(self):
        self._send(204, b"", content_type="text/plain")

    def do_GET(self):
        path = unquote(self.path.split("?", 1)[0])
        if path.startswith("/tree/"):
            view = self.state.tree_view(path[len("/tree/"):])
            if view is None:
                return self._error(404, "unknown feared event")
            return self._send(200, view)
        if path.startswith("/report/"):
            report = self.state.reports.get(path[len("/report/"):])
            if report is None:
                return self._error(404, "unknown feared event")
            return self._send(200, report)
        if path == "/events":
            return self._send(200, {
                "feared_events": [
                    {"id": fe.id, "severity": fe.severity,
                     "label": self.state.dags[fe.id].root.label}
                    for fe in self.state.bundle.study.feared_events
                ]})
        if self.ui_dir is not None:
            return self._serve_static(path)
        return self._error(404, "not found")

    def do_PUT(self):
        path = unquote(self.path)
        if not path.startswith("/annotation/"):
            return self._error(404, "not found")
        node_path = path[len("/annotation/"):]
        body = self._read_body()
        if body is None or "decision" not in body:
            return self._error(400, "body must be JSON with a 'decision' field")
        try:
            annotation = Annotation(
                decision=body["decision"],
                comment=str(body.get("comment", "")),
                color=body.get("color"))
        except AttackTreeError as exc:
            return self._error(400, str(exc))
        if not self.state.write_lock.acquire(blocking=False):
            return self._error(409, "another annotation write is in flight")
        try:
            if not self.state.annotate(node_path, annotation):
                return self._error(404, "unknown node path")
            return self._send(200, {"path": node_path,
                                    "annotation": annotation.to_dict()})
        finally:
            self.state.write_lock.release()

    def do_POST(self):
        path = unquote(self.path)
        if path != "/regenerate":
            return self._error(404, "not found")
        body = self._read_body()
        if body is None:
            return self._error(400, "malformed JSON body")
        fe_id = body.get("feared_event")
        if fe_id is not None and fe_id not in self.state.dags:
            return self._error(404, "unknown feared event")
        try:
            report = self.state.regenerate_all(fe_id)
        except AttackTreeError as exc:
            return self._error(400, str(exc))
        return self._send(200, report)

    # -- static UI --------------------------------------------------------------

    _CONTENT_TYPES = {
        ".html": "text/html; charset=utf-8",
        ".js": "text/javascript; charset=utf-8",
        ".css": "text/css; charset=utf-8",
        ".map": "application/json",
    }

    def _serve_static(self, path: str) -> None:
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            return self._error(404, "not found")
        content_type = self._CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send(200, target.read_bytes(), content_type=content_type)


def make_server(bundle_dir: str | Path, host: str = "127.0.0.1", port: int = 0,
                ui_dir: Path | None = None) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    state = AppState(load_bundle(bundle_dir))

    class Handler(_Handler):
        pass

    Handler.state = state
    Handler.ui_dir = Path(ui_dir) if ui_dir else None
    return ThreadingHTTPServer((host, port), Handler)


def run_server(bundle_dir: str | Path, host: str, port: int,
               ui_dir: Path | None = None) -> None:
    server = make_server(bundle_dir, host, port, ui_dir=ui_dir)
    host_shown, port_shown = server.server_address[:2]
    print(f"serving on http://{host_shown}:{port_shown}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
