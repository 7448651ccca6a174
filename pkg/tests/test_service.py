"""Engine workers, coalescing, recompile skipping, and the HTTP/WS front."""

import threading
import time

import pytest
from fastapi.testclient import TestClient

import oracles
from liverec import backends as backends_mod
from liverec.errors import BackendUnavailable, LiveRecError
from liverec.recorder import COMPLETED, FAILED, INTERRUPTED, StackRecording
from liverec.service import (
    ANNOTATION_ERROR,
    COMPILE_ERROR,
    ENGINE_ERROR,
    RECORDING,
    ProbeEngine,
    _code_fingerprint,
    create_app,
    probe_result_to_json,
    recording_to_json,
)


@pytest.fixture()
def engine(tmp_path):
    with ProbeEngine(workdir=tmp_path / "engine") as eng:
        yield eng


# -- direct submission ---------------------------------------------------------


def test_submit_produces_oracle_recording(engine):
    result = engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    assert result.outcome == RECORDING
    assert result.language == "mock"
    assert result.probe.function == "foo"
    assert result.probe.args == ("3",)
    rec = result.recording
    assert rec.status == COMPLETED
    assert rec.return_value == oracles.FOO_RETURN
    assert [(s.line, dict(s.variables)) for s in rec.snapshots] == oracles.FOO_SNAPSHOTS


def test_submit_without_annotation(engine):
    result = engine.submit("// nothing here\n{}", "mock", timeout=20)
    assert result.outcome == ANNOTATION_ERROR
    assert "no probe annotation" in result.error
    assert result.recording is None


def test_submit_malformed_annotation(engine):
    result = engine.submit("// @foo(1, (2)\n{}", "mock", timeout=20)
    assert result.outcome == ANNOTATION_ERROR
    assert "line 1" in result.error


def test_submit_unloadable_source(engine):
    result = engine.submit("// @foo(3)\n{broken json", "mock", timeout=20)
    assert result.outcome == COMPILE_ERROR
    assert "JSON" in result.error
    # the lane recovers once the source is fixed
    fixed = engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    assert fixed.outcome == RECORDING


def test_submit_unknown_language(engine):
    with pytest.raises(BackendUnavailable):
        engine.submit_async("x", "cobol")


def test_latest_tracks_recordings_only(engine):
    assert engine.latest("mock") is None
    good = engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    assert engine.latest("mock") is good
    engine.submit("// no annotation\n{}", "mock", timeout=20)
    assert engine.latest("mock") is good


def test_subscribe_and_unsubscribe(engine):
    seen = []
    unsubscribe = engine.subscribe("mock", seen.append)
    engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    assert len(seen) == 1 and seen[0].outcome == RECORDING
    unsubscribe()
    engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    assert len(seen) == 1


def test_closed_engine_rejects_submissions(tmp_path):
    eng = ProbeEngine(workdir=tmp_path / "w")
    eng.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    eng.close()
    with pytest.raises(LiveRecError):
        eng.submit_async(oracles.FOO_MOCK_SOURCE, "mock")


def test_owned_tempdir_is_removed():
    eng = ProbeEngine()
    workdir = eng.workdir
    eng.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    assert workdir.exists()
    eng.close()
    assert not workdir.exists()


# -- burst coalescing ----------------------------------------------------------


def _foo_with_arg(n):
    return oracles.FOO_MOCK_SOURCE.replace("@foo(3)", f"@foo({n})")


def test_burst_coalesces_to_newest(engine):
    worker = engine._worker("mock")
    gate = threading.Event()
    ran = []
    original = worker._run_probe

    def gated(source):
        ran.append(source)
        if len(ran) == 1:
            gate.wait(timeout=10)
        return original(source)

    worker._run_probe = gated
    first = engine.submit_async(oracles.FOO_MOCK_SOURCE, "mock")
    deadline = time.monotonic() + 5
    while not ran and time.monotonic() < deadline:
        time.sleep(0.005)
    assert ran, "worker never picked up the first job"

    burst = [engine.submit_async(_foo_with_arg(i), "mock") for i in range(8)]
    gate.set()

    results = [fut.result(timeout=20) for fut in burst]
    # the whole burst collapsed into one run of the newest source
    assert len({id(r) for r in results}) == 1
    assert results[0].outcome == RECORDING
    assert results[0].probe.args == ("7",)
    assert first.result(timeout=20).outcome == RECORDING
    # exactly two probes ran: the gated first one and the burst's survivor
    assert len(ran) == 2
    assert ran[1] == _foo_with_arg(7)


# -- recompile skipping --------------------------------------------------------


def test_fingerprint_ignores_annotation_line():
    from liverec.probespec import parse_annotation

    base = oracles.FOO_MOCK_SOURCE
    probe_a = parse_annotation(base, "//", "mock")
    variant = _foo_with_arg(9)
    probe_b = parse_annotation(variant, "//", "mock")
    assert _code_fingerprint(base, probe_a) == _code_fingerprint(variant, probe_b)
    changed = base.replace('"line": 7', '"line": 6')
    probe_c = parse_annotation(changed, "//", "mock")
    assert _code_fingerprint(base, probe_a) != _code_fingerprint(changed, probe_c)


def test_input_only_change_skips_reload(engine, monkeypatch):
    loads = []
    original = backends_mod.load_code

    def counting(backend, session, artifact):
        loads.append(str(artifact))
        return original(backend, session, artifact)

    monkeypatch.setattr(backends_mod, "load_code", counting)

    assert engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20).outcome == RECORDING
    assert len(loads) == 1
    # same code, different probe input: the loaded program is reused
    again = engine.submit(_foo_with_arg(4), "mock", timeout=20)
    assert again.outcome == RECORDING
    assert again.recording.status == COMPLETED
    assert len(loads) == 1
    # a body edit forces a reload
    edited = oracles.FOO_MOCK_SOURCE.replace('"pop": "3"', '"pop": "4"')
    engine.submit(edited, "mock", timeout=20)
    assert len(loads) == 2


def test_interruption_invalidates_loaded_code(engine, monkeypatch):
    loads = []
    original = backends_mod.load_code

    def counting(backend, session, artifact):
        loads.append(str(artifact))
        return original(backend, session, artifact)

    monkeypatch.setattr(backends_mod, "load_code", counting)

    spun = engine.submit(oracles.SPIN_MOCK_SOURCE, "mock", timeout=30)
    assert spun.outcome == RECORDING
    assert spun.recording.status == INTERRUPTED
    assert len(spun.recording.snapshots) == engine.max_steps
    # the relaunched session lost the program; the same source must reload
    respun = engine.submit(oracles.SPIN_MOCK_SOURCE, "mock", timeout=30)
    assert respun.recording.status == INTERRUPTED
    assert loads.count(loads[0]) == 2


# -- worker recovery -----------------------------------------------------------


def test_closed_session_is_replaced(engine):
    engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    worker = engine._worker("mock")
    worker._session.close()
    result = engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    assert result.outcome == RECORDING
    assert result.recording.status == COMPLETED


def test_killed_adapter_process_recovers(engine):
    engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    worker = engine._worker("mock")
    worker._session.adapter_process.kill()
    worker._session.adapter_process.wait(timeout=5)
    first = engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    assert first.outcome in (ENGINE_ERROR, RECORDING)
    second = engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    assert second.outcome == RECORDING
    assert second.recording.status == COMPLETED


# -- wire shapes ---------------------------------------------------------------


def test_recording_json_shape(engine):
    result = engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    data = recording_to_json(result.recording)
    assert data == {
        "status": "completed",
        "return": oracles.FOO_RETURN,
        "snapshots": [
            {
                "line": line,
                "column": 1,
                "height": 0,
                "variables": [{"name": n, "value": v} for n, v in vars.items()],
            }
            for line, vars in oracles.FOO_SNAPSHOTS
        ],
        "histories": [
            {"name": name, "entries": [{"value": v, "line": l} for v, l in entries]}
            for name, entries in oracles.FOO_HISTORIES.items()
        ],
    }


def test_recording_json_failure_field():
    rec = StackRecording(snapshots=[], return_value=None, status=FAILED, failure="invoke")
    data = recording_to_json(rec)
    assert data["status"] == "failed"
    assert data["failure"] == "invoke"
    assert data["return"] is None
    assert data["snapshots"] == []


def test_probe_result_json_annotation_span(engine):
    result = engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
    data = probe_result_to_json(result)
    assert data["outcome"] == "recording"
    assert data["language"] == "mock"
    assert data["probe"] == {
        "function": "foo",
        "args": ["3"],
        "annotation": {"line": 1, "start_column": 1, "end_column": 11},
    }
    assert "error" not in data


# -- HTTP / WebSocket ----------------------------------------------------------


@pytest.fixture()
def client(engine):
    app = create_app(engine)
    with TestClient(app) as test_client:
        yield test_client


def test_http_probe_roundtrip(client):
    resp = client.post("/probe", json={"source": oracles.FOO_MOCK_SOURCE, "language": "mock"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["outcome"] == "recording"
    assert body["recording"]["status"] == "completed"
    assert body["recording"]["return"] == oracles.FOO_RETURN
    assert [s["line"] for s in body["recording"]["snapshots"]] == oracles.FOO_SNAPSHOT_LINES


def test_http_probe_unknown_language(client):
    resp = client.post("/probe", json={"source": "x", "language": "cobol"})
    assert resp.status_code == 404
    assert "cobol" in resp.json()["detail"]


def test_http_probe_validation(client):
    assert client.post("/probe", json={"language": "mock"}).status_code == 422


def test_http_backends_listing(client):
    resp = client.get("/backends")
    assert resp.status_code == 200
    rows = {row["language"]: row for row in resp.json()}
    assert {"mock", "python", "c"} <= set(rows)
    assert rows["mock"]["available"] is True
    assert "reason" not in rows["mock"]
    assert rows["mock"]["comment_marker"] == "//"
    for row in rows.values():
        if not row["available"]:
            assert row["reason"]


def test_http_latest_recording(client):
    assert client.get("/recordings/latest", params={"language": "mock"}).status_code == 404
    assert client.get("/recordings/latest", params={"language": "nope"}).status_code == 404
    client.post("/probe", json={"source": oracles.FOO_MOCK_SOURCE, "language": "mock"})
    resp = client.get("/recordings/latest", params={"language": "mock"})
    assert resp.status_code == 200
    assert resp.json()["recording"]["return"] == oracles.FOO_RETURN


def test_websocket_pushes_probe_results(client, engine):
    with client.websocket_connect("/live?language=mock") as ws:
        engine.submit(oracles.FOO_MOCK_SOURCE, "mock", timeout=20)
        frame = ws.receive_json()
        assert frame["outcome"] == "recording"
        assert frame["recording"]["return"] == oracles.FOO_RETURN

    # a late subscriber gets the latest recording on connect
    with client.websocket_connect("/live?language=mock") as ws:
        frame = ws.receive_json()
        assert frame["recording"]["return"] == oracles.FOO_RETURN


def test_websocket_unknown_language(client):
    with client.websocket_connect("/live?language=cobol") as ws:
        frame = ws.receive_json()
        assert "error" in frame


def test_static_ui_mount_keeps_api_routes(engine, tmp_path):
    ui_dir = tmp_path / "ui"
    ui_dir.mkdir()
    (ui_dir / "index.html").write_text("<h1>probe ui</h1>")
    app = create_app(engine, ui_dir=ui_dir)
    with TestClient(app) as test_client:
        page = test_client.get("/")
        assert page.status_code == 200
        assert "probe ui" in page.text
        resp = test_client.post(
            "/probe", json={"source": oracles.FOO_MOCK_SOURCE, "language": "mock"}
        )
        assert resp.status_code == 200
        assert test_client.get("/backends").status_code == 200
        assert test_client.get("/nonexistent.js").status_code == 404


def test_app_owned_engine_is_closed_by_lifespan(tmp_path):
    app = create_app(workdir=tmp_path / "owned")
    with TestClient(app) as test_client:
        resp = test_client.post(
            "/probe", json={"source": oracles.FOO_MOCK_SOURCE, "language": "mock"}
        )
        assert resp.status_code == 200
        engine = app.state.engine
    assert engine._closed
