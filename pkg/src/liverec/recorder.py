"""Record stack-frame evolution while a probed function runs.

One snapshot is taken per debugger stop, *before* the pending statement runs:
(line, column, height above the entry depth, and the top frame's first-scope
variables in adapter order). Stepping is always step-over, so calls out of the
probed function execute invisibly; if the function re-enters itself through
its own function breakpoint, recording simply continues at height > 0.

Truncation: the step cap is checked before a snapshot is appended, so an
interrupted recording holds exactly ``max_steps`` snapshots; the session is
then relaunched to get the runaway debuggee back to its keep-alive loop.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any

from . import backends
from .errors import DebuggeeTerminated, InvokeError, InvokeTimeout
from .probespec import ProbeRequest
from .session import DebugSession

COMPLETED = "completed"
INTERRUPTED = "interrupted"
FAILED = "failed"

DEFAULT_MAX_STEPS = 80


def max_steps_from_env(default: int = DEFAULT_MAX_STEPS) -> int:
    """Step cap, honouring the LIVEREC_MAX_STEPS override."""
    raw = os.environ.get("LIVEREC_MAX_STEPS", "")
    try:
        value = int(raw)
    except ValueError:
        return default
    return value if value > 0 else default


@dataclass(frozen=True)
class StackFrameSnapshot:
    line: int
    column: int
    height: int
    variables: dict[str, str]  # insertion-ordered: exactly what the adapter reported


@dataclass
class StackRecording:
    snapshots: list[StackFrameSnapshot] = field(default_factory=list)
    return_value: str | None = None
    status: str = COMPLETED
    failure: str | None = None  # set when status == FAILED: "invoke" or "terminated"


def record(
    session: DebugSession,
    backend: backends.Backend,
    probe: ProbeRequest,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> StackRecording:
    """Run the probe and capture one snapshot per stop until the function exits."""
    session.set_function_breakpoints([probe.function])
    try:
        backends.invoke(backend, session, probe)
    except (InvokeError, InvokeTimeout):
        return StackRecording(status=FAILED, failure="invoke")
    except DebuggeeTerminated:
        session.restart()
        return StackRecording(status=FAILED, failure="terminated")

    snapshots: list[StackFrameSnapshot] = []
    initial_depth: int | None = None
    try:
        while True:
            frames = session.stack_trace()
            if not frames:
                break
            if initial_depth is None:
                initial_depth = len(frames)
            top = frames[0]
            if top.get("name") != probe.function:
                break
            if len(snapshots) >= max_steps:
                session.restart()
                return StackRecording(snapshots, None, INTERRUPTED)
            snapshots.append(StackFrameSnapshot(
                line=int(top.get("line") or 1),
                column=int(top.get("column") or 1),
                height=len(frames) - initial_depth,
                variables=_frame_variables(session, top),
            ))
            session.step_over()
            session.wait_stopped()
        return_value = backends.detect_return(
            backend,
            list(_raw_variables(session, top)) if frames else [],
            function=probe.function,
            session=session,
            frame_id=top.get("id") if frames else None,
        )
        for _ in range(backend.reset_cycles):
            session.continue_()
            session.wait_stopped()
        return StackRecording(snapshots, return_value, COMPLETED)
    except DebuggeeTerminated:
        session.restart()
        return StackRecording(snapshots, None, FAILED, failure="terminated")


def _raw_variables(session: DebugSession, frame: dict[str, Any]) -> list[dict[str, Any]]:
    scopes = session.scopes(int(frame["id"]))
    if not scopes:
        return []
    return session.variables(int(scopes[0]["variablesReference"]))


def _frame_variables(session: DebugSession, frame: dict[str, Any]) -> dict[str, str]:
    return {
        str(v.get("name", "")): str(v.get("value", ""))
        for v in _raw_variables(session, frame)
    }


def histories(recording: StackRecording) -> dict[str, list[tuple[str, int]]]:
    """Per-variable value history: (value-text, line that produced it) pairs.

    Consecutive equal values collapse to one entry. A value first observed in
    snapshot k is attributed to the line of snapshot k-1 — the statement that
    executed to produce it; values already present at entry (bound parameters)
    attribute to the entry snapshot's own line.
    """
    out: dict[str, list[tuple[str, int]]] = {}
    last_seen: dict[str, str] = {}
    for index, snap in enumerate(recording.snapshots):
        origin = recording.snapshots[index - 1].line if index > 0 else snap.line
        for name, value in snap.variables.items():
            if name not in last_seen or last_seen[name] != value:
                out.setdefault(name, []).append((value, origin))
                last_seen[name] = value
    return out


def snapshot_at(recording: StackRecording, t: int) -> tuple[StackFrameSnapshot, int]:
    """Snapshot number ``t`` (0-based) and the line to highlight for it."""
    if not 0 <= t < len(recording.snapshots):
        raise IndexError(
            f"snapshot index {t} out of range (recording has {len(recording.snapshots)})"
        )
    snap = recording.snapshots[t]
    return snap, snap.line
