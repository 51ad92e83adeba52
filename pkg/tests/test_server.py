"""HTTP API: merged tree views, annotation writes, regeneration."""

import json
import shutil
import threading
import urllib.error
import urllib.request
from urllib.parse import quote

import pytest

from attacktree.bundle import load_bundle, load_overlay
from attacktree.generate import generate
from attacktree.maintain import regenerate
from attacktree.server import make_server

ROOT = "fe-braking-integrity"
CLOSE_PATH = (f"{ROOT}/st-operating/md-engine-running/HW"
              "/cmp-brake-pedal/MAT-MOD/ts-chauffeur")


@pytest.fixture()
def live_server(tmp_path, car_bundle_dir):
    bundle_dir = tmp_path / "bundle"
    shutil.copytree(car_bundle_dir, bundle_dir)
    server = make_server(bundle_dir, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    base = f"http://{host}:{port}"
    state = server.RequestHandlerClass.state
    yield base, bundle_dir, state
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


def _request(method: str, url: str, body: dict | None = None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode() or "{}")


def test_get_tree_returns_merged_view(live_server):
    base, _, _ = live_server
    status, doc = _request("GET", f"{base}/tree/{ROOT}")
    assert status == 200
    assert doc["feared_event"] == ROOT
    assert doc["orphaned_annotations"] == []
    assert any(n["path"] == CLOSE_PATH for n in doc["nodes"])


def test_get_tree_unknown_event_404(live_server):
    base, _, _ = live_server
    status, _ = _request("GET", f"{base}/tree/fe-nope")
    assert status == 404


def test_put_close_then_tree_reflects_it(live_server):
    base, bundle_dir, _ = live_server
    status, doc = _request("PUT", f"{base}/annotation/{quote(CLOSE_PATH)}",
                           {"decision": "closed", "comment": "reviewed"})
    assert status == 200
    status, tree = _request("GET", f"{base}/tree/{ROOT}")
    node = next(n for n in tree["nodes"] if n["path"] == CLOSE_PATH)
    assert node["annotation"]["decision"] == "closed"
    # persisted atomically to the overlay file
    overlay = load_overlay(bundle_dir / "overlay.json")
    assert overlay[CLOSE_PATH].decision == "closed"


def test_put_unknown_path_404(live_server):
    base, _, _ = live_server
    status, _ = _request("PUT", f"{base}/annotation/no/such/node",
                         {"decision": "closed"})
    assert status == 404


def test_put_malformed_body_400(live_server):
    base, _, _ = live_server
    status, _ = _request("PUT", f"{base}/annotation/{quote(CLOSE_PATH)}",
                         {"note": "missing decision"})
    assert status == 400
    status, _ = _request("PUT", f"{base}/annotation/{quote(CLOSE_PATH)}",
                         {"decision": "perhaps"})
    assert status == 400


def test_put_while_write_in_flight_409(live_server):
    base, _, state = live_server
    state.write_lock.acquire()
    try:
        status, _ = _request("PUT", f"{base}/annotation/{quote(CLOSE_PATH)}",
                             {"decision": "closed"})
        assert status == 409
    finally:
        state.write_lock.release()


def test_post_regenerate_identity_empty_delta(live_server):
    base, _, _ = live_server
    status, report = _request("POST", f"{base}/regenerate",
                              {"feared_event": ROOT})
    assert status == 200
    assert report["added_paths"] == [] and report["warned_paths"] == []
    assert report["relabeled_paths"] == []
    status, again = _request("GET", f"{base}/report/{ROOT}")
    assert status == 200 and again == report


def test_post_regenerate_unknown_event_404(live_server):
    base, _, _ = live_server
    status, _ = _request("POST", f"{base}/regenerate",
                         {"feared_event": "fe-nope"})
    assert status == 404


def test_post_regenerate_matches_cli_equivalent(live_server, car_bundle_dir,
                                                car_renamed_dir):
    """API regeneration equals the library/CLI path on identical inputs."""
    base, bundle_dir, _ = live_server
    shutil.copy(car_renamed_dir / "architecture.json",
                bundle_dir / "architecture.json")
    status, report = _request("POST", f"{base}/regenerate",
                              {"feared_event": ROOT})
    assert status == 200

    old_bundle = load_bundle(car_bundle_dir)
    fe = old_bundle.study.feared_event(ROOT)
    old_dag = generate(fe, old_bundle.model, old_bundle.study, old_bundle.kb,
                       old_bundle.config)
    new_bundle = load_bundle(car_renamed_dir)
    _, expected = regenerate(fe, new_bundle.model, new_bundle.study,
                             new_bundle.kb, new_bundle.config, old_dag, {})
    assert report["relabeled_paths"] == expected.relabeled_paths
    assert report["unchanged_paths"] == expected.unchanged_paths


def test_annotation_survives_regeneration(live_server, car_renamed_dir):
    base, bundle_dir, _ = live_server
    _request("PUT", f"{base}/annotation/{quote(CLOSE_PATH)}",
             {"decision": "closed"})
    shutil.copy(car_renamed_dir / "architecture.json",
                bundle_dir / "architecture.json")
    status, _ = _request("POST", f"{base}/regenerate", {"feared_event": ROOT})
    assert status == 200
    status, tree = _request("GET", f"{base}/tree/{ROOT}")
    node = next(n for n in tree["nodes"] if n["path"] == CLOSE_PATH)
    assert node["annotation"]["decision"] == "closed"


def test_events_listing(live_server):
    base, _, _ = live_server
    status, doc = _request("GET", f"{base}/events")
    assert status == 200
    assert [e["id"] for e in doc["feared_events"]] == [ROOT]
