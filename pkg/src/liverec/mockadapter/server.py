"""The mock adapter itself: a scripted debuggee behind a real wire protocol.

The synthetic debuggee is a keep-alive loop ("kaa_main") that idles stopped on
the runner breakpoint the client sets. Three evaluate forms drive it, mirroring
the live backends:

* ``load('<path>')``       — (re)load a scripted program file
* ``set_method('f',[a..])``— arm a call that the next continue performs
* ``f(a..)``               — call immediately (debugger-as-caller mode)

Stepping honours step-over semantics: a called function executes invisibly
unless a function breakpoint is armed for it, in which case execution stops at
its first step. When a function returns to its caller, ``__return__`` appears
in the caller's locals. Everything is single-threaded and deterministic: the
same program plus the same request transcript yields byte-identical output.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Any, BinaryIO, Callable

from .. import wire
from ..errors import LiveRecError, ProtocolError
from ..probespec import split_arguments
from .program import MockFunction, MockProgram, MockProgramError, POP, PUSH, load_program

_THREAD_ID = 1
_BUDGET = 1_000_000

_LOAD_RE = re.compile(r"^load\(\s*'([^']*)'\s*\)\s*$")
_SET_METHOD_RE = re.compile(r"^set_method\(\s*'([A-Za-z_][A-Za-z0-9_]*)'\s*,\s*\[(.*)\]\s*\)\s*$", re.DOTALL)
_CALL_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", re.DOTALL)


class _DAPError(LiveRecError):
    """Turned into a failure response for the offending request."""


@dataclass
class _Frame:
    function: MockFunction | None  # None marks the keep-alive frame
    pc: int = 0
    vars: dict[str, str] = field(default_factory=dict)


class Debuggee:
    """Interpreter for scripted executions (no protocol knowledge)."""

    KAA_NAME = "kaa_main"
    IDLE = "idle"
    AFTER_CALL = "after_call"

    def __init__(self, program: MockProgram | None = None, program_path: str | None = None):
        self.program = program or MockProgram()
        self.program_path = program_path
        self.frames: list[_Frame] = []
        self.armed_functions: set[str] = set()
        self.armed_call: tuple[str, tuple[str, ...]] | None = None
        self.kaa_state = self.IDLE
        self.runner_path = "<kaa>"
        self.runner_line = 1
        self.epoch = 0
        self.started = False

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> str:
        """Enter the keep-alive loop; returns the stop reason."""
        self.frames = [_Frame(function=None)]
        self.started = True
        return self._stop("breakpoint")

    def load(self, path: str) -> None:
        try:
            self.program = load_program(path)
        except OSError as exc:
            raise _DAPError(f"cannot read program: {exc}") from exc
        self.program_path = path
        self.armed_call = None

    def arm_call(self, name: str, args: tuple[str, ...]) -> None:
        if name not in self.program.functions:
            raise _DAPError(f"unknown function: {name}")
        self.armed_call = (name, args)

    # -- execution ---------------------------------------------------------

    def continue_(self) -> str:
        return self._stop(self._run_until(None))

    def step_next(self) -> str:
        top = self.frames[-1]
        if top.function is None:
            self._settle_idle(top)
            return self._stop("step")
        depth = len(self.frames)
        outcome = self._execute_step()
        if outcome == "pushed_armed":
            return self._stop("function breakpoint")
        if outcome == "pushed":
            return self._stop(self._run_until(depth))
        return self._stop("step")

    def step_out(self) -> str:
        top = self.frames[-1]
        if top.function is None:
            self._settle_idle(top)
            return self._stop("step")
        return self._stop(self._run_until(len(self.frames) - 1))

    def call_function(self, name: str, args: tuple[str, ...]) -> tuple[str, str | None]:
        """Immediate call (debugger-as-caller). Returns (result text, stop reason or None)."""
        fn = self.program.functions.get(name)
        if fn is None:
            raise _DAPError(f"unknown function: {name}")
        caller = self.frames[-1]
        saved_state = self.kaa_state
        saved_return = caller.vars.get("__return__")
        self._push(fn, args)
        if name in self.armed_functions:
            return f"<calling {name}>", self._stop("function breakpoint")
        depth = len(self.frames)
        reason = self._run_until(depth - 1)
        if len(self.frames) >= depth:
            # stopped inside a deeper armed function before returning
            return f"<calling {name}>", self._stop(reason)
        result = caller.vars.pop("__return__", None)
        if saved_return is not None:
            caller.vars["__return__"] = saved_return
        self.kaa_state = saved_state
        return result if result is not None else "<no value>", None

    def _run_until(self, target_depth: int | None) -> str:
        for _ in range(_BUDGET):
            if target_depth is not None and len(self.frames) <= target_depth:
                return "step"
            top = self.frames[-1]
            if top.function is None:
                if self.armed_call is not None:
                    name, args = self.armed_call
                    self.armed_call = None
                    fn = self.program.functions.get(name)
                    if fn is None:
                        raise _DAPError(f"unknown function: {name}")
                    self._push(fn, args)
                    if name in self.armed_functions:
                        return "function breakpoint"
                    continue
                self._settle_idle(top)
                return "breakpoint"
            if self._execute_step() == "pushed_armed":
                return "function breakpoint"
        raise _DAPError("execution budget exceeded (runaway script?)")

    def _execute_step(self) -> str:
        frame = self.frames[-1]
        fn = frame.function
        assert fn is not None
        step = fn.steps[frame.pc]
        for name, value in step.var_updates:
            frame.vars[name] = value
        if step.action == PUSH:
            callee = self.program.functions.get(step.target or "")
            if callee is None:
                raise _DAPError(f"push target vanished after reload: {step.target!r}")
            self._push(callee, step.call_args)
            return "pushed_armed" if callee.name in self.armed_functions else "pushed"
        if step.action == POP:
            self.frames.pop()
            caller = self.frames[-1]
            if caller.function is None:
                self.kaa_state = self.AFTER_CALL
            else:
                self._advance(caller)
            if step.value is None:
                caller.vars.pop("__return__", None)
            else:
                caller.vars["__return__"] = step.value
            return "popped"
        self._advance(frame)
        return "stay"

    def _push(self, fn: MockFunction, args: tuple[str, ...]) -> None:
        bound = dict(zip(fn.params, args))
        self.frames.append(_Frame(function=fn, pc=0, vars=bound))

    @staticmethod
    def _advance(frame: _Frame) -> None:
        assert frame.function is not None
        frame.pc = (frame.pc + 1) % len(frame.function.steps)

    def _settle_idle(self, kaa: _Frame) -> None:
        self.kaa_state = self.IDLE
        kaa.vars.pop("__return__", None)

    def _stop(self, reason: str) -> str:
        self.epoch += 1
        return reason

    # -- inspection --------------------------------------------------------

    def stack_frames(self) -> list[dict[str, Any]]:
        out = []
        for index, frame in enumerate(reversed(self.frames)):
            frame_id = self.epoch * 1000 + index
            if frame.function is None:
                line = self.runner_line if self.kaa_state == self.IDLE else self.runner_line + 2
                out.append({
                    "id": frame_id,
                    "name": self.KAA_NAME,
                    "line": line,
                    "column": 1,
                    "source": {"name": self.runner_path, "path": self.runner_path},
                })
            else:
                step = frame.function.steps[frame.pc]
                path = self.program_path or "<mock>"
                out.append({
                    "id": frame_id,
                    "name": frame.function.name,
                    "line": step.line,
                    "column": step.column,
                    "source": {"name": path, "path": path},
                })
        return out

    def _frame_at(self, frame_id: int) -> _Frame:
        if frame_id // 1000 != self.epoch:
            raise _DAPError(f"stale frame id: {frame_id}")
        index = frame_id % 1000
        if index >= len(self.frames):
            raise _DAPError(f"no such frame: {frame_id}")
        return self.frames[len(self.frames) - 1 - index]

    def scopes(self, frame_id: int) -> list[dict[str, Any]]:
        self._frame_at(frame_id)
        return [{"name": "Locals", "variablesReference": frame_id * 10 + 1, "expensive": False}]

    def variables(self, var_ref: int) -> list[dict[str, Any]]:
        frame = self._frame_at(var_ref // 10)
        return [
            {"name": name, "value": value, "variablesReference": 0}
            for name, value in frame.vars.items()
        ]


class _Disconnect(Exception):
    pass


class MockAdapter:
    """Protocol layer: maps requests onto the Debuggee, emits responses + events."""

    def __init__(
        self,
        program: MockProgram | None = None,
        program_path: str | None = None,
        latency: float = 0.0,
        die_after_steps: int = 0,
    ):
        self.debuggee = Debuggee(program, program_path)
        self.latency = latency
        self.die_after_steps = die_after_steps
        self._steps_served = 0
        self._seq = wire.SeqCounter()
        self._configured = False
        self._dead = False
        self._handlers: dict[str, Callable[[Any], tuple[Any, list[tuple[str, Any]]]]] = {
            "initialize": self._handle_initialize,
            "launch": self._handle_launch,
            "setBreakpoints": self._handle_set_breakpoints,
            "setFunctionBreakpoints": self._handle_set_function_breakpoints,
            "configurationDone": self._handle_configuration_done,
            "threads": self._handle_threads,
            "stackTrace": self._handle_stack_trace,
            "scopes": self._handle_scopes,
            "variables": self._handle_variables,
            "evaluate": self._handle_evaluate,
            "next": self._handle_next,
            "continue": self._handle_continue,
            "stepOut": self._handle_step_out,
            "disconnect": self._handle_disconnect,
        }

    def handle(self, msg: wire.DapMessage) -> list[wire.DapMessage]:
        """Process one request, returning the response followed by any events."""
        if msg.kind != wire.REQUEST:
            return []
        command = msg.command or ""
        events: list[tuple[str, Any]] = []
        disconnect = False
        try:
            if self._dead and command != "disconnect":
                raise _DAPError("debuggee terminated")
            handler = self._handlers.get(command)
            if handler is None:
                raise _DAPError(f"unsupported request: {command}")
            try:
                body, events = handler(msg.arguments or {})
            except _Disconnect:
                body, events = {}, [("terminated", {})]
                disconnect = True
            out = [wire.response(self._seq.next_seq(), msg.seq, True, command, body)]
        except _DAPError as exc:
            out = [wire.response(self._seq.next_seq(), msg.seq, False, command, message=str(exc))]
        except MockProgramError as exc:
            out = [wire.response(self._seq.next_seq(), msg.seq, False, command, message=str(exc))]
        for name, body in events:
            out.append(wire.event(self._seq.next_seq(), name, body))
        if disconnect:
            out.append(_STOP_SENTINEL)
        return out

    # -- handlers ----------------------------------------------------------

    def _handle_initialize(self, args: Any):
        body = {
            "supportsConfigurationDoneRequest": True,
            "supportsFunctionBreakpoints": True,
            "supportsConditionalBreakpoints": False,
        }
        return body, []

    def _handle_launch(self, args: Any):
        return {}, [("initialized", {})]

    def _handle_set_breakpoints(self, args: Any):
        source = args.get("source") or {}
        path = source.get("path") or source.get("name") or "<kaa>"
        lines = args.get("lines") or [bp.get("line") for bp in args.get("breakpoints", [])]
        if lines:
            self.debuggee.runner_path = path
            self.debuggee.runner_line = int(lines[0])
        body = {"breakpoints": [{"verified": True, "line": int(l)} for l in lines]}
        return body, []

    def _handle_set_function_breakpoints(self, args: Any):
        names = [bp.get("name") for bp in args.get("breakpoints", []) if bp.get("name")]
        self.debuggee.armed_functions = set(names)
        return {"breakpoints": [{"verified": True} for _ in names]}, []

    def _handle_configuration_done(self, args: Any):
        if self._configured:
            return {}, []
        self._configured = True
        reason = self.debuggee.start()
        return {}, [("stopped", self._stopped_body(reason))]

    def _handle_threads(self, args: Any):
        return {"threads": [{"id": _THREAD_ID, "name": "main"}]}, []

    def _handle_stack_trace(self, args: Any):
        self._require_started()
        frames = self.debuggee.stack_frames()
        return {"stackFrames": frames, "totalFrames": len(frames)}, []

    def _handle_scopes(self, args: Any):
        self._require_started()
        frame_id = args.get("frameId")
        if not isinstance(frame_id, int):
            raise _DAPError(f"bad frameId: {frame_id!r}")
        return {"scopes": self.debuggee.scopes(frame_id)}, []

    def _handle_variables(self, args: Any):
        self._require_started()
        ref = args.get("variablesReference")
        if not isinstance(ref, int):
            raise _DAPError(f"bad variablesReference: {ref!r}")
        return {"variables": self.debuggee.variables(ref)}, []

    def _handle_evaluate(self, args: Any):
        self._require_started()
        expression = (args.get("expression") or "").strip()
        m = _LOAD_RE.match(expression)
        if m:
            self.debuggee.load(m.group(1))
            return {"result": "loaded", "variablesReference": 0}, []
        m = _SET_METHOD_RE.match(expression)
        if m:
            args_text = m.group(2)
            self.debuggee.arm_call(m.group(1), tuple(self._split(args_text)))
            return {"result": "armed", "variablesReference": 0}, []
        m = _CALL_RE.match(expression)
        if m:
            result, reason = self.debuggee.call_function(m.group(1), tuple(self._split(m.group(2))))
            events = [("stopped", self._stopped_body(reason))] if reason else []
            return {"result": result, "variablesReference": 0}, events
        raise _DAPError(f"unsupported expression: {expression!r}")

    def _handle_next(self, args: Any):
        self._require_started()
        self._steps_served += 1
        if self.die_after_steps and self._steps_served > self.die_after_steps:
            self._dead = True
            return {}, [("terminated", {})]
        reason = self.debuggee.step_next()
        return {}, [("stopped", self._stopped_body(reason))]

    def _handle_continue(self, args: Any):
        self._require_started()
        reason = self.debuggee.continue_()
        return {"allThreadsContinued": True}, [("stopped", self._stopped_body(reason))]

    def _handle_step_out(self, args: Any):
        self._require_started()
        reason = self.debuggee.step_out()
        return {}, [("stopped", self._stopped_body(reason))]

    def _handle_disconnect(self, args: Any):
        raise _Disconnect()

    # -- helpers -----------------------------------------------------------

    def _require_started(self) -> None:
        if not self.debuggee.started:
            raise _DAPError("debuggee not started (configurationDone not seen)")

    @staticmethod
    def _stopped_body(reason: str) -> dict[str, Any]:
        return {"reason": reason, "threadId": _THREAD_ID, "allThreadsStopped": True}

    @staticmethod
    def _split(text: str) -> list[str]:
        try:
            return split_arguments(text)
        except LiveRecError as exc:
            raise _DAPError(f"bad argument list: {exc}") from exc


_STOP_SENTINEL = wire.event(10 ** 9, "mock-adapter-stop")


def serve(adapter: MockAdapter, rfile: BinaryIO, wfile: BinaryIO) -> None:
    """Blocking request loop over binary streams (normally stdin/stdout)."""
    decoder = wire.StreamDecoder()
    while True:
        chunk = rfile.read1(65536) if hasattr(rfile, "read1") else rfile.read(65536)
        if not chunk:
            return
        try:
            messages = decoder.feed(chunk)
        except ProtocolError:
            return
        for msg in messages:
            for out in adapter.handle(msg):
                if out is _STOP_SENTINEL:
                    return
                if out.kind == wire.RESPONSE and adapter.latency > 0:
                    time.sleep(adapter.latency / 1000.0)
                wfile.write(wire.encode(out))
                wfile.flush()
