"""The probe engine and its HTTP/WebSocket front.

One worker thread per language owns that language's debug session. Submissions
are coalesced: while a probe is running, newer sources overwrite the single
pending slot, so a burst of edits costs at most the running probe plus one
more. Everyone who submitted a superseded source gets the result of the probe
that superseded it — that is the answer to "what does the code say now?".

Workers skip the compile-and-load stage when the source is unchanged outside
the annotation line (an input-only edit), because the debuggee still holds
exactly that code. Any recording that did not complete invalidates this cache:
the truncation path relaunches the whole session, which empties the debuggee.
"""

from __future__ import annotations

import asyncio
import hashlib
import shutil
import tempfile
import threading
from concurrent.futures import Future
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from fastapi import FastAPI, HTTPException, WebSocket
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__, backends, recorder
from .errors import AnnotationError, CompileError, LiveRecError, LoadError
from .probespec import ProbeRequest, parse_annotation
from .recorder import StackRecording
from .session import DEAD, DebugSession

RECORDING = "recording"
COMPILE_ERROR = "compile_error"
ANNOTATION_ERROR = "annotation_error"
ENGINE_ERROR = "engine_error"


@dataclass
class ProbeResult:
    outcome: str  # RECORDING | COMPILE_ERROR | ANNOTATION_ERROR | ENGINE_ERROR
    language: str
    probe: ProbeRequest | None = None
    recording: StackRecording | None = None
    error: str | None = None


def recording_to_json(recording: StackRecording) -> dict[str, Any]:
    """The recording wire shape served to editors and the bench."""
    data: dict[str, Any] = {
        "status": recording.status,
        "return": recording.return_value,
        "snapshots": [
            {
                "line": snap.line,
                "column": snap.column,
                "height": snap.height,
                "variables": [{"name": n, "value": v} for n, v in snap.variables.items()],
            }
            for snap in recording.snapshots
        ],
        "histories": [
            {
                "name": name,
                "entries": [{"value": value, "line": line} for value, line in entries],
            }
            for name, entries in recorder.histories(recording).items()
        ],
    }
    if recording.failure is not None:
        data["failure"] = recording.failure
    return data


def probe_result_to_json(result: ProbeResult) -> dict[str, Any]:
    data: dict[str, Any] = {"outcome": result.outcome, "language": result.language}
    if result.probe is not None:
        line, start_col, end_col = result.probe.annotation_span
        data["probe"] = {
            "function": result.probe.function,
            "args": list(result.probe.args),
            "annotation": {"line": line, "start_column": start_col, "end_column": end_col},
        }
    if result.recording is not None:
        data["recording"] = recording_to_json(result.recording)
    if result.error is not None:
        data["error"] = result.error
    return data


def _code_fingerprint(source: str, probe: ProbeRequest) -> str:
    """Hash of the source with the annotation line blanked.

    Two sources with equal fingerprints load identical code into the debuggee;
    only the probe's inputs differ.
    """
    lines = source.splitlines()
    index = probe.annotation_span[0] - 1
    if 0 <= index < len(lines):
        lines[index] = ""
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


@dataclass
class _Job:
    source: str
    futures: list[Future]


class BackendWorker(threading.Thread):
    """Owns one language's session; runs probes one at a time, newest wins."""

    def __init__(self, backend: backends.Backend, workdir: Path, max_steps: int):
        super().__init__(name=f"liverec-{backend.language}", daemon=True)
        self.backend = backend
        self.workdir = workdir
        self.max_steps = max_steps
        self._cond = threading.Condition()
        self._pending: _Job | None = None
        self._closed = False
        self._session: DebugSession | None = None
        self._loaded_fingerprint: str | None = None

    # called from any thread
    def submit(self, source: str) -> Future:
        fut: Future = Future()
        with self._cond:
            if self._closed:
                raise LiveRecError(f"{self.backend.language} worker is closed")
            if self._pending is None:
                self._pending = _Job(source, [fut])
            else:
                self._pending.source = source
                self._pending.futures.append(fut)
            self._cond.notify()
        return fut

    def shutdown(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify()
        self.join(timeout=10)
        if self._session is not None:
            self._session.close()
            self._session = None

    def run(self) -> None:
        while True:
            with self._cond:
                while self._pending is None and not self._closed:
                    self._cond.wait()
                if self._pending is None and self._closed:
                    return
                job, self._pending = self._pending, None
            result = self._run_probe(job.source)
            for fut in job.futures:
                fut.set_result(result)
            self._on_result(result)

    # overwritten by the engine to fan results out to latest/listeners
    def _on_result(self, result: ProbeResult) -> None:  # pragma: no cover - rebound
        pass

    def _drop_session(self) -> None:
        if self._session is not None:
            try:
                self._session.close()
            except Exception:
                pass
        self._session = None
        self._loaded_fingerprint = None

    def _run_probe(self, source: str) -> ProbeResult:
        language = self.backend.language
        try:
            probe = parse_annotation(source, self.backend.comment_marker, language)
        except AnnotationError as exc:
            return ProbeResult(ANNOTATION_ERROR, language, error=str(exc))
        if probe is None:
            return ProbeResult(ANNOTATION_ERROR, language, error="no probe annotation found")

        try:
            if self._session is None or self._session.status == DEAD:
                self._drop_session()
                self._session = backends.build_session(self.backend, self.workdir)
                self._session.launch()
        except Exception as exc:
            self._drop_session()
            return ProbeResult(ENGINE_ERROR, language, probe=probe, error=str(exc))

        fingerprint = _code_fingerprint(source, probe)
        if fingerprint != self._loaded_fingerprint:
            try:
                artifact = backends.compile_source(self.backend, source, self.workdir)
            except CompileError as exc:
                return ProbeResult(COMPILE_ERROR, language, probe=probe, error=str(exc))
            try:
                backends.load_code(self.backend, self._session, artifact)
            except LoadError as exc:
                # The debuggee may hold a half-applied load; don't trust it.
                self._loaded_fingerprint = None
                return ProbeResult(COMPILE_ERROR, language, probe=probe, error=str(exc))
            except Exception as exc:
                self._drop_session()
                return ProbeResult(ENGINE_ERROR, language, probe=probe, error=str(exc))
            self._loaded_fingerprint = fingerprint

        try:
            recording = recorder.record(self._session, self.backend, probe, self.max_steps)
        except Exception as exc:
            self._drop_session()
            return ProbeResult(ENGINE_ERROR, language, probe=probe, error=str(exc))
        if recording.status != recorder.COMPLETED:
            # Truncation and mid-run failures relaunch the session, which
            # leaves the debuggee without the probed code.
            self._loaded_fingerprint = None
        return ProbeResult(RECORDING, language, probe=probe, recording=recording)


class ProbeEngine:
    """Submission front for all languages; lazily starts one worker per language."""

    def __init__(
        self,
        workdir: str | Path | None = None,
        max_steps: int | None = None,
    ):
        self._owns_workdir = workdir is None
        self.workdir = Path(workdir) if workdir is not None else Path(tempfile.mkdtemp(prefix="liverec-"))
        self.max_steps = max_steps if max_steps is not None else recorder.max_steps_from_env()
        self.backends = backends.load_backends()
        self._lock = threading.Lock()
        self._workers: dict[str, BackendWorker] = {}
        self._latest: dict[str, ProbeResult] = {}
        self._listeners: dict[str, list[Callable[[ProbeResult], None]]] = {}
        self._closed = False

    def _worker(self, language: str) -> BackendWorker:
        if language not in self.backends:
            raise backends.BackendUnavailable(
                f"no backend for language {language!r} (have: {', '.join(sorted(self.backends))})"
            )
        with self._lock:
            if self._closed:
                raise LiveRecError("engine is closed")
            worker = self._workers.get(language)
            if worker is None:
                worker = BackendWorker(
                    self.backends[language], self.workdir / language, self.max_steps
                )
                worker._on_result = lambda result: self._publish(language, result)
                worker.start()
                self._workers[language] = worker
        return worker

    def _publish(self, language: str, result: ProbeResult) -> None:
        with self._lock:
            if result.outcome == RECORDING:
                self._latest[language] = result
            listeners = list(self._listeners.get(language, ()))
        for callback in listeners:
            try:
                callback(result)
            except Exception:
                pass

    def submit_async(self, source: str, language: str) -> Future:
        return self._worker(language).submit(source)

    def submit(self, source: str, language: str, timeout: float | None = None) -> ProbeResult:
        return self.submit_async(source, language).result(timeout)

    def latest(self, language: str) -> ProbeResult | None:
        with self._lock:
            return self._latest.get(language)

    def subscribe(self, language: str, callback: Callable[[ProbeResult], None]) -> Callable[[], None]:
        with self._lock:
            self._listeners.setdefault(language, []).append(callback)

        def unsubscribe() -> None:
            with self._lock:
                try:
                    self._listeners.get(language, []).remove(callback)
                except ValueError:
                    pass

        return unsubscribe

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            workers = list(self._workers.values())
            self._workers.clear()
        for worker in workers:
            worker.shutdown()
        if self._owns_workdir:
            shutil.rmtree(self.workdir, ignore_errors=True)

    def __enter__(self) -> "ProbeEngine":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()


# -- HTTP / WebSocket front ---------------------------------------------------

class ProbePayload(BaseModel):
    source: str
    language: str = "mock"


def create_app(
    engine: ProbeEngine | None = None,
    workdir: str | Path | None = None,
    max_steps: int | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    owns_engine = engine is None
    live_engine = engine if engine is not None else ProbeEngine(workdir=workdir, max_steps=max_steps)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        if owns_engine:
            live_engine.close()

    app = FastAPI(title="liverec", version=__version__, lifespan=lifespan)
    app.state.engine = live_engine

    @app.post("/probe")
    async def probe(payload: ProbePayload) -> dict[str, Any]:
        try:
            fut = live_engine.submit_async(payload.source, payload.language)
        except backends.BackendUnavailable as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        result = await asyncio.wrap_future(fut)
        return probe_result_to_json(result)

    @app.get("/backends")
    async def list_backends() -> list[dict[str, Any]]:
        rows = []
        for language in sorted(live_engine.backends):
            backend = live_engine.backends[language]
            ok, why = backends.availability(backend)
            row: dict[str, Any] = {
                "language": language,
                "display_name": backend.display_name,
                "comment_marker": backend.comment_marker,
                "source_extension": backend.source_extension,
                "available": ok,
            }
            if not ok:
                row["reason"] = why
            rows.append(row)
        return rows

    @app.get("/recordings/latest")
    async def latest_recording(language: str = "mock") -> dict[str, Any]:
        if language not in live_engine.backends:
            raise HTTPException(status_code=404, detail=f"no backend for language {language!r}")
        result = live_engine.latest(language)
        if result is None:
            raise HTTPException(status_code=404, detail=f"no recording yet for {language!r}")
        return probe_result_to_json(result)

    @app.websocket("/live")
    async def live(ws: WebSocket) -> None:
        language = ws.query_params.get("language", "mock")
        await ws.accept()
        if language not in live_engine.backends:
            await ws.send_json({"error": f"no backend for language {language!r}"})
            await ws.close()
            return
        loop = asyncio.get_running_loop()
        updates: asyncio.Queue = asyncio.Queue()

        def push(result: ProbeResult) -> None:
            loop.call_soon_threadsafe(updates.put_nowait, probe_result_to_json(result))

        unsubscribe = live_engine.subscribe(language, push)
        receive: asyncio.Future | None = None
        try:
            current = live_engine.latest(language)
            if current is not None:
                await ws.send_json(probe_result_to_json(current))
            receive = asyncio.ensure_future(ws.receive())
            while True:
                getter = asyncio.ensure_future(updates.get())
                done, _ = await asyncio.wait({receive, getter}, return_when=asyncio.FIRST_COMPLETED)
                if receive in done:
                    getter.cancel()
                    message = receive.result() if not receive.cancelled() else {}
                    if message.get("type") == "websocket.disconnect":
                        break
                    receive = asyncio.ensure_future(ws.receive())
                    if getter not in done:
                        continue
                await ws.send_json(getter.result())
        except Exception:
            pass
        finally:
            unsubscribe()
            if receive is not None and not receive.done():
                receive.cancel()

    if ui_dir is not None:
        # mounted last so the API routes above keep winning
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
