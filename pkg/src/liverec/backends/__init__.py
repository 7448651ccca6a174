"""Language backends, described by data.

A backend is a JSON manifest (``manifests/<language>.json``) plus one
keep-alive runner asset (``kaa/``). The manifest says how to start the debug
adapter, where the runner parks its idle breakpoint, how probe sources are
compiled and loaded, which side evaluates the probe call (the debuggee's own
keep-alive loop, or the debugger's expression evaluator), and how the return
value is recovered afterwards. Adding a language means adding a manifest and a
runner — no engine code changes.

Placeholders in ``adapter_launch`` / ``launch_args`` are filled per workdir:
``{python}`` (this interpreter), ``{runner_path}`` (the materialized runner),
``{cwd}`` (the workdir), ``{kaa_binary}`` (the compiled C runner host).
"""

from __future__ import annotations

import importlib.util
import json
import os
import re
import shutil
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..errors import (
    BackendUnavailable,
    CompileError,
    InvokeError,
    InvokeTimeout,
    LaunchError,
    LoadError,
)
from ..probespec import ProbeRequest
from ..session import DebugSession, SessionConfig

DEBUGGEE_CALLER = "debuggee"
DEBUGGER_CALLER = "debugger"

_MANIFEST_DIR = Path(__file__).resolve().parent / "manifests"
_KAA_DIR = Path(__file__).resolve().parent / "kaa"
_PACKAGE_SRC_DIR = Path(__file__).resolve().parents[2]

# How many resume-and-look laps invoke() gives the debuggee to reach the probed
# function before giving up. Each lap is one breakpoint stop, so this only
# matters when the call never arrives (e.g. the function name resolves to
# nothing debuggee-side).
_ARRIVE_ATTEMPTS = 50


@dataclass(frozen=True)
class Backend:
    """One language lane, as declared by its manifest."""

    language: str
    display_name: str
    comment_marker: str
    source_extension: str
    call_mode: str  # DEBUGGEE_CALLER or DEBUGGER_CALLER
    reset_cycles: int
    compile_mode: str | None  # None: sources load as written; "cc_shared": build a .so
    load_mode: str  # "mock_load" | "eval_set_import" | "shared_library"
    return_detection: str  # "variable:<name pattern>" | "last_value"
    invoke_template: str  # expression with {function} and {args} holes
    kaa_asset: str
    runner_breakpoint_line: int
    adapter_launch: tuple[str, ...]
    launch_args: dict[str, Any]
    initialize_args: dict[str, Any]


_MANIFEST_KEYS = {
    "language", "display_name", "comment_marker", "source_extension",
    "call_mode", "reset_cycles", "compile", "load", "return_detection",
    "invoke", "kaa", "runner_breakpoint_line", "adapter_launch",
    "launch_args", "initialize_args",
}


def _backend_from_manifest(data: dict[str, Any], origin: Path) -> Backend:
    missing = _MANIFEST_KEYS - data.keys()
    if missing:
        raise ValueError(f"{origin.name}: missing manifest keys {sorted(missing)}")
    unknown = data.keys() - _MANIFEST_KEYS
    if unknown:
        raise ValueError(f"{origin.name}: unknown manifest keys {sorted(unknown)}")
    if data["call_mode"] not in (DEBUGGEE_CALLER, DEBUGGER_CALLER):
        raise ValueError(f"{origin.name}: bad call_mode {data['call_mode']!r}")
    if not (_KAA_DIR / data["kaa"]).is_file():
        raise ValueError(f"{origin.name}: runner asset {data['kaa']!r} not found")
    return Backend(
        language=data["language"],
        display_name=data["display_name"],
        comment_marker=data["comment_marker"],
        source_extension=data["source_extension"],
        call_mode=data["call_mode"],
        reset_cycles=int(data["reset_cycles"]),
        compile_mode=data["compile"],
        load_mode=data["load"],
        return_detection=data["return_detection"],
        invoke_template=data["invoke"],
        kaa_asset=data["kaa"],
        runner_breakpoint_line=int(data["runner_breakpoint_line"]),
        adapter_launch=tuple(data["adapter_launch"]),
        launch_args=dict(data["launch_args"]),
        initialize_args=dict(data["initialize_args"]),
    )


def load_backends() -> dict[str, Backend]:
    """All registered backends, keyed by language name."""
    found: dict[str, Backend] = {}
    for path in sorted(_MANIFEST_DIR.glob("*.json")):
        backend = _backend_from_manifest(json.loads(path.read_text(encoding="utf-8")), path)
        found[backend.language] = backend
    return found


def get_backend(language: str) -> Backend:
    backends = load_backends()
    if language not in backends:
        raise BackendUnavailable(
            f"no backend for language {language!r} (have: {', '.join(sorted(backends))})"
        )
    return backends[language]


def kaa_source_path(backend: Backend) -> Path:
    return _KAA_DIR / backend.kaa_asset


# -- availability -------------------------------------------------------------

_gdb_dap_cache: dict[str, bool] = {}


def _gdb_speaks_dap(exe: str) -> bool:
    # The DAP interpreter shipped in gdb 14; probe the version banner once.
    if exe not in _gdb_dap_cache:
        try:
            out = subprocess.run(
                [exe, "--version"], capture_output=True, text=True, timeout=10
            ).stdout
        except (OSError, subprocess.TimeoutExpired):
            out = ""
        match = re.search(r"\b(\d+)\.(\d+)", out.splitlines()[0] if out else "")
        _gdb_dap_cache[exe] = bool(match) and int(match.group(1)) >= 14
    return _gdb_dap_cache[exe]


def availability(backend: Backend) -> tuple[bool, str]:
    """Whether this backend can run here; if not, a human-readable reason."""
    first = backend.adapter_launch[0]
    if first == "{python}":
        if "-m" in backend.adapter_launch:
            module = backend.adapter_launch[backend.adapter_launch.index("-m") + 1]
            package = module.split(".")[0]
            if importlib.util.find_spec(package) is None:
                return False, f"python package {package!r} is not installed"
    else:
        exe = shutil.which(first)
        if exe is None:
            return False, f"{first!r} not found on PATH"
        if first == "gdb" and "dap" in backend.adapter_launch and not _gdb_speaks_dap(exe):
            return False, "gdb has no DAP interpreter (needs gdb >= 14)"
    if backend.compile_mode == "cc_shared" and _find_cc() is None:
        return False, "no C compiler (cc/gcc) on PATH"
    return True, ""


def require_available(backend: Backend) -> None:
    ok, why = availability(backend)
    if not ok:
        raise BackendUnavailable(f"{backend.language} backend unavailable: {why}")


def _find_cc() -> str | None:
    return shutil.which("cc") or shutil.which("gcc")


# -- session construction -----------------------------------------------------

def _fill(template: str, values: dict[str, str]) -> str:
    out = template
    for key, val in values.items():
        out = out.replace("{" + key + "}", val)
    return out


def _fill_tree(node: Any, values: dict[str, str]) -> Any:
    if isinstance(node, str):
        return _fill(node, values)
    if isinstance(node, list):
        return [_fill_tree(item, values) for item in node]
    if isinstance(node, dict):
        return {key: _fill_tree(val, values) for key, val in node.items()}
    return node


def materialize_runner(backend: Backend, workdir: str | Path) -> tuple[Path, dict[str, str]]:
    """Copy the keep-alive runner into ``workdir/kaa`` and compute placeholder values.

    For the C lane this also builds the runner host binary, since the adapter
    launches it as the debuggee program.
    """
    kaa_dir = Path(workdir) / "kaa"
    kaa_dir.mkdir(parents=True, exist_ok=True)
    runner_path = kaa_dir / backend.kaa_asset
    shutil.copyfile(kaa_source_path(backend), runner_path)
    values = {
        "python": sys.executable,
        "runner_path": str(runner_path),
        "cwd": str(Path(workdir)),
    }
    needs_binary = any(
        "{kaa_binary}" in part
        for part in list(backend.adapter_launch) + [json.dumps(backend.launch_args)]
    )
    if needs_binary:
        cc = _find_cc()
        if cc is None:
            raise BackendUnavailable("no C compiler (cc/gcc) on PATH to build the runner host")
        binary = kaa_dir / "runner"
        proc = subprocess.run(
            [cc, "-g", "-O0", "-o", str(binary), str(runner_path), "-ldl"],
            capture_output=True, text=True,
        )
        if proc.returncode != 0:
            raise LaunchError(f"could not build keep-alive host: {proc.stderr.strip()}")
        values["kaa_binary"] = str(binary)
    return runner_path, values


def build_session(backend: Backend, workdir: str | Path) -> DebugSession:
    """An unlaunched DebugSession wired for this backend in ``workdir``."""
    require_available(backend)
    runner_path, values = materialize_runner(backend, workdir)
    env = {}
    if backend.adapter_launch[0] == "{python}":
        # Adapters launched as python modules must resolve even when the
        # package is used straight from a source tree.
        existing = os.environ.get("PYTHONPATH", "")
        env["PYTHONPATH"] = str(_PACKAGE_SRC_DIR) + (
            os.pathsep + existing if existing else ""
        )
    config = SessionConfig(
        adapter_launch=[_fill(part, values) for part in backend.adapter_launch],
        initialize_args=dict(backend.initialize_args),
        launch_args=_fill_tree(backend.launch_args, values),
        runner_path=str(runner_path),
        runner_breakpoint=(str(runner_path), backend.runner_breakpoint_line),
        env=env,
        workdir=str(workdir),
    )
    return DebugSession(config)


# -- probe source lifecycle ---------------------------------------------------

def compile_source(
    backend: Backend, source: str, workdir: str | Path, basename: str = "probe"
) -> Path:
    """Write the probe source into ``workdir`` and build it if the lane compiles.

    Returns the path of the loadable artifact (the source itself for
    interpreted lanes, the shared object for C). Compiler diagnostics surface
    as CompileError.
    """
    out_dir = Path(workdir)
    out_dir.mkdir(parents=True, exist_ok=True)
    src_path = out_dir / (basename + backend.source_extension)
    src_path.write_text(source, encoding="utf-8")
    if backend.compile_mode is None:
        return src_path
    if backend.compile_mode == "cc_shared":
        cc = _find_cc()
        if cc is None:
            raise CompileError("no C compiler (cc/gcc) on PATH")
        so_path = out_dir / (basename + ".so")
        proc = subprocess.run(
            [cc, "-shared", "-fPIC", "-g", "-O0", "-o", str(so_path), str(src_path)],
            capture_output=True, text=True,
        )
        if proc.returncode != 0:
            raise CompileError(proc.stderr.strip() or f"compiler exited with {proc.returncode}")
        return so_path
    raise ValueError(f"unknown compile mode {backend.compile_mode!r}")


def _top_frame_id(session: DebugSession) -> int | None:
    frames = session.stack_trace()
    return int(frames[0]["id"]) if frames else None


def load_code(backend: Backend, session: DebugSession, artifact: str | Path) -> None:
    """Install a compiled artifact into the idling debuggee. LoadError on failure."""
    path = str(artifact)
    frame_id = _top_frame_id(session)
    if backend.load_mode == "mock_load":
        resp = session.evaluate(f"load('{path}')", frame_id)
        if not resp.success:
            raise LoadError(resp.message or "load failed")
    elif backend.load_mode == "eval_set_import":
        resp = session.evaluate(f"set_import({path!r})", frame_id)
        if not resp.success:
            raise LoadError(resp.message or "set_import failed")
        # One keep-alive lap actually performs the import; then read back the
        # runner's load_error slot, which a broken file fills instead of dying.
        session.continue_()
        session.wait_stopped()
        check = session.evaluate("load_error", _top_frame_id(session))
        if check.success:
            result = str((check.body or {}).get("result", "None"))
            if result not in ("None", "'None'"):
                raise LoadError(result.strip("'\""))
    elif backend.load_mode == "shared_library":
        resp = session.evaluate(f'load_library("{path}")', frame_id)
        if not resp.success:
            raise LoadError(resp.message or "load_library failed")
    else:
        raise ValueError(f"unknown load mode {backend.load_mode!r}")


def invoke(backend: Backend, session: DebugSession, probe: ProbeRequest) -> None:
    """Trigger one probe call and park the debuggee at the function's entry stop.

    Debuggee-caller lanes hand the call request to the keep-alive loop and
    resume until the function breakpoint fires. Debugger-caller lanes make the
    adapter evaluate the call itself, so the evaluate response is deliberately
    not awaited — it only arrives once the whole call finishes.
    """
    expr = _fill(backend.invoke_template, {
        "function": probe.function,
        "args": ", ".join(probe.args),
    })
    frame_id = _top_frame_id(session)
    if backend.call_mode == DEBUGGEE_CALLER:
        resp = session.evaluate(expr, frame_id)
        if not resp.success:
            raise InvokeError(resp.message or f"evaluate failed: {expr}")
        for _ in range(_ARRIVE_ATTEMPTS):
            session.continue_()
            session.wait_stopped()
            frames = session.stack_trace()
            if frames and frames[0].get("name") == probe.function:
                return
    else:
        session.evaluate_nowait(expr, frame_id)
        for _ in range(_ARRIVE_ATTEMPTS):
            session.wait_stopped()
            frames = session.stack_trace()
            if frames and frames[0].get("name") == probe.function:
                return
            session.continue_()
    raise InvokeTimeout(
        f"{probe.function} did not reach its breakpoint within {_ARRIVE_ATTEMPTS} resumes"
    )


def detect_return(
    backend: Backend,
    variables: list[dict[str, Any]],
    *,
    function: str,
    session: DebugSession | None = None,
    frame_id: int | None = None,
) -> str | None:
    """Recover the finished call's return value, or None if there isn't one."""
    mode = backend.return_detection
    if mode.startswith("variable:"):
        wanted = _fill(mode[len("variable:"):], {"function": function})
        for var in variables:
            if var.get("name") == wanted:
                value = var.get("value")
                return None if value is None else str(value)
        return None
    if mode == "last_value":
        # gdb-style: the call's value is the most recent entry in the value
        # history, reachable as $ from the paused frame.
        if session is None:
            return None
        resp = session.evaluate("$", frame_id)
        if not resp.success:
            return None
        result = (resp.body or {}).get("result")
        return None if result is None else str(result)
    raise ValueError(f"unknown return detection mode {mode!r}")
