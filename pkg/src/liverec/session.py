"""A live session against one debug adapter process.

The session owns the adapter subprocess and (via the adapter's reverse
``runInTerminal`` request) at most one debuggee subprocess. A dedicated reader
thread drains the adapter's stream into a queue; ``wait_for`` consumes from it,
answering reverse requests inline and buffering whatever else arrives out of
order, so no message is ever dropped.

Launch walks the canonical sequence: spawn adapter, send ``initialize`` and
``launch`` (their responses are not waited on — some adapters only answer
``launch`` after configuration), consume the ``initialized`` event, set the
keep-alive runner breakpoint, send ``configurationDone``, then consume the
first ``stopped`` event. At that point the debuggee idles inside the runner
loop and the session is ready to load and probe code.
"""

from __future__ import annotations

import os
import queue
import socket
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Any, IO

from . import wire
from .errors import (
    DebuggeeTerminated,
    LaunchError,
    ProtocolError,
    SessionClosed,
    SessionTimeout,
)

STDIO = "stdio"
SOCKET = "socket"

NEW = "new"
IDLE = "idle"
DEAD = "dead"

DEFAULT_TIMEOUT = 10.0


@dataclass
class SessionConfig:
    """Everything needed to launch an adapter and park a debuggee on its runner loop."""

    adapter_launch: list[str]
    initialize_args: dict[str, Any]
    launch_args: dict[str, Any]
    runner_path: str
    runner_breakpoint: tuple[str, int]
    env: dict[str, str] = field(default_factory=dict)
    io_mode: str = STDIO
    host: str = "127.0.0.1"
    port: int = 0
    request_timeout: float = DEFAULT_TIMEOUT
    workdir: str | None = None

    def __post_init__(self) -> None:
        if not self.adapter_launch:
            raise ValueError("adapter_launch must not be empty")
        if self.runner_breakpoint[0] != self.runner_path:
            raise ValueError("runner_breakpoint path must equal runner_path")
        if self.io_mode not in (STDIO, SOCKET):
            raise ValueError(f"unknown io_mode: {self.io_mode!r}")


class DebugSession:
    """Drives one adapter: breakpoints, stepping, stack inspection, evaluation."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.workdir = config.workdir or os.getcwd()
        self.status = NEW
        self.adapter_process: subprocess.Popen | None = None
        self.debuggee_process: subprocess.Popen | None = None
        self._seq = wire.SeqCounter()
        self._queue: queue.Queue = queue.Queue()
        self._buffer: list[wire.DapMessage] = []
        self._reader: threading.Thread | None = None
        self._write_lock = threading.Lock()
        self._sock: socket.socket | None = None
        self._wfile: IO[bytes] | None = None
        self._rfd: int | None = None
        self._last_thread_id = 1
        self._stderr_file: IO[bytes] | None = None

    # -- lifecycle ---------------------------------------------------------

    def launch(self) -> None:
        if self.status != NEW:
            raise LaunchError(f"session already launched (status: {self.status})")
        os.makedirs(self.workdir, exist_ok=True)
        env = dict(os.environ)
        env.update(self.config.env)
        stderr_path = os.path.join(self.workdir, "adapter-stderr.log")
        self._stderr_file = open(stderr_path, "ab")
        try:
            if self.config.io_mode == STDIO:
                self.adapter_process = subprocess.Popen(
                    self.config.adapter_launch,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=self._stderr_file,
                    env=env,
                    cwd=self.workdir,
                )
                self._rfd = self.adapter_process.stdout.fileno()
                self._wfile = self.adapter_process.stdin
            else:
                self.adapter_process = subprocess.Popen(
                    self.config.adapter_launch,
                    stderr=self._stderr_file,
                    env=env,
                    cwd=self.workdir,
                )
                self._sock = self._connect(self.config.host, self.config.port)
                self._rfd = self._sock.fileno()
                self._wfile = self._sock.makefile("wb")
        except OSError as exc:
            self.status = DEAD
            raise LaunchError(f"could not start adapter {self.config.adapter_launch!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self.send_request("initialize", self.config.initialize_args)
        self.send_request("launch", self.config.launch_args)
        self.wait_for(wire.EVENT, event="initialized")
        path, line = self.config.runner_breakpoint
        self.set_breakpoints(path, [line])
        self.configuration_done()
        self.wait_stopped()
        self.status = IDLE

    @staticmethod
    def _connect(host: str, port: int, window: float = 5.0) -> socket.socket:
        deadline = time.monotonic() + window
        while True:
            try:
                sock = socket.create_connection((host, port), timeout=1.0)
                # back to blocking: the reader does raw os.read on the fd, and
                # a timeout here would leave the fd non-blocking under it
                sock.settimeout(None)
                return sock
            except OSError as exc:
                if time.monotonic() >= deadline:
                    raise LaunchError(f"could not connect to adapter at {host}:{port}: {exc}") from exc
                time.sleep(0.05)

    def restart(self) -> None:
        """Tear everything down and run the launch sequence again."""
        self._shutdown_processes()
        self._seq = wire.SeqCounter()
        self._queue = queue.Queue()
        self._buffer = []
        self._last_thread_id = 1
        self.status = NEW
        self.launch()

    def close(self) -> None:
        self._shutdown_processes()
        self.status = DEAD

    def __enter__(self) -> "DebugSession":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()

    def _shutdown_processes(self) -> None:
        for proc in (self.debuggee_process, self.adapter_process):
            if proc is not None and proc.poll() is None:
                proc.terminate()
                try:
                    proc.wait(timeout=2.0)
                except subprocess.TimeoutExpired:
                    proc.kill()
                    proc.wait(timeout=2.0)
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None
        # Let the reader drain its EOF before any pipe fds are closed (and
        # possibly reused by a relaunch while it still reads the old number).
        if self._reader is not None and self._reader is not threading.current_thread():
            self._reader.join(timeout=2.0)
        self._reader = None
        if self.adapter_process is not None:
            for stream in (self.adapter_process.stdin, self.adapter_process.stdout):
                if stream is not None:
                    try:
                        stream.close()
                    except OSError:
                        pass
        if self._stderr_file is not None:
            self._stderr_file.close()
            self._stderr_file = None
        self.adapter_process = None
        self.debuggee_process = None

    # -- plumbing ----------------------------------------------------------

    def _read_loop(self) -> None:
        decoder = wire.StreamDecoder()
        rfd = self._rfd
        # Bind the queue now: after a restart this thread must keep delivering
        # to the session generation it belongs to, never the replacement's.
        q = self._queue
        assert rfd is not None
        while True:
            try:
                data = os.read(rfd, 65536)
            except OSError:
                q.put(("eof", None))
                return
            if not data:
                q.put(("eof", None))
                return
            try:
                for msg in decoder.feed(data):
                    q.put(("msg", msg))
            except ProtocolError as exc:
                q.put(("error", exc))
                return

    def _send(self, msg: wire.DapMessage) -> None:
        if self.status == DEAD:
            raise SessionClosed("session is dead")
        assert self._wfile is not None
        data = wire.encode(msg)
        try:
            with self._write_lock:
                self._wfile.write(data)
                self._wfile.flush()
        except (OSError, ValueError) as exc:
            self.status = DEAD
            raise DebuggeeTerminated(f"adapter pipe closed: {exc}") from exc

    def send_request(self, command: str, arguments: Any = None) -> int:
        seq = self._seq.next_seq()
        self._send(wire.request(seq, command, arguments))
        return seq

    def wait_for(
        self,
        kind: str,
        event: str | None = None,
        command: str | None = None,
        request_seq: int | None = None,
        timeout: float | None = None,
    ) -> wire.DapMessage:
        """Next message matching the selector; everything else is buffered.

        Reverse requests are answered inline. A ``terminated`` event that is
        not itself awaited raises DebuggeeTerminated and kills the session.
        """
        if self.status == DEAD:
            raise SessionClosed("session is dead")

        def matches(m: wire.DapMessage) -> bool:
            if m.kind != kind:
                return False
            if event is not None and m.event != event:
                return False
            if command is not None and m.command != command:
                return False
            if request_seq is not None and m.request_seq != request_seq:
                return False
            return True

        for i, msg in enumerate(self._buffer):
            if matches(msg):
                return self._buffer.pop(i)
        deadline = time.monotonic() + (timeout if timeout is not None else self.config.request_timeout)
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise SessionTimeout(
                    f"no {kind}{'/' + (event or command or '') if (event or command) else ''} "
                    f"within {self.config.request_timeout if timeout is None else timeout}s"
                )
            try:
                item, payload = self._queue.get(timeout=remaining)
            except queue.Empty:
                continue
            if item == "eof":
                self.status = DEAD
                raise DebuggeeTerminated("adapter stream closed")
            if item == "error":
                self.status = DEAD
                raise payload
            msg = payload
            if msg.kind == wire.REQUEST:
                if self._handle_reverse_request(msg):
                    continue
                self._buffer.append(msg)
                continue
            if matches(msg):
                return msg
            if msg.kind == wire.EVENT and msg.event == "terminated":
                self.status = DEAD
                raise DebuggeeTerminated()
            self._buffer.append(msg)

    def request(self, command: str, arguments: Any = None, timeout: float | None = None) -> wire.DapMessage:
        seq = self.send_request(command, arguments)
        return self.wait_for(wire.RESPONSE, command=command, request_seq=seq, timeout=timeout)

    def _handle_reverse_request(self, msg: wire.DapMessage) -> bool:
        if msg.command != "runInTerminal":
            return False
        args = msg.arguments or {}
        cmdline = args.get("args") or []
        if self.debuggee_process is not None:
            self._send(wire.response(self._seq.next_seq(), msg.seq, False, "runInTerminal",
                                     message="a debuggee is already running in this session"))
            self.status = DEAD
            return True
        tmp = os.path.join(self.workdir, "tmp")
        os.makedirs(tmp, exist_ok=True)
        env = dict(os.environ)
        env.update(self.config.env)
        env.update(args.get("env") or {})
        try:
            with open(os.path.join(tmp, "stdout.txt"), "ab") as out, \
                 open(os.path.join(tmp, "stderr.txt"), "ab") as err:
                self.debuggee_process = subprocess.Popen(
                    cmdline,
                    stdout=out,
                    stderr=err,
                    cwd=args.get("cwd") or self.workdir,
                    env=env,
                )
        except OSError as exc:
            self._send(wire.response(self._seq.next_seq(), msg.seq, False, "runInTerminal",
                                     message=f"could not spawn debuggee: {exc}"))
            self.status = DEAD
            return True
        self._send(wire.response(self._seq.next_seq(), msg.seq, True, "runInTerminal",
                                 body={"shellProcessId": self.debuggee_process.pid}))
        return True

    # -- protocol operations ----------------------------------------------

    def set_breakpoints(self, path: str, lines: list[int]) -> wire.DapMessage:
        return self.request("setBreakpoints", {
            "source": {"name": path, "path": path},
            "lines": lines,
            "breakpoints": [{"line": line} for line in lines],
            "sourceModified": False,
        })

    def set_function_breakpoints(self, names: list[str]) -> wire.DapMessage:
        return self.request("setFunctionBreakpoints", {
            "breakpoints": [{"name": name} for name in names],
        })

    def configuration_done(self) -> wire.DapMessage:
        return self.request("configurationDone", {})

    def stack_trace(self, thread_id: int | None = None) -> list[dict[str, Any]]:
        resp = self.request("stackTrace", {
            "threadId": self._thread(thread_id),
            "startFrame": 0,
            "levels": 100,
        })
        return (resp.body or {}).get("stackFrames", [])

    def scopes(self, frame_id: int) -> list[dict[str, Any]]:
        resp = self.request("scopes", {"frameId": frame_id})
        return (resp.body or {}).get("scopes", [])

    def variables(self, variables_reference: int) -> list[dict[str, Any]]:
        resp = self.request("variables", {"variablesReference": variables_reference})
        return (resp.body or {}).get("variables", [])

    def evaluate(self, expression: str, frame_id: int | None = None,
                 context: str = "repl") -> wire.DapMessage:
        """Full response is returned; callers inspect the success flag."""
        args: dict[str, Any] = {"expression": expression, "context": context}
        if frame_id is not None:
            args["frameId"] = frame_id
        return self.request("evaluate", args)

    def evaluate_nowait(self, expression: str, frame_id: int | None = None,
                        context: str = "repl") -> int:
        """Send an evaluate without waiting: used when the call itself will stop."""
        args: dict[str, Any] = {"expression": expression, "context": context}
        if frame_id is not None:
            args["frameId"] = frame_id
        return self.send_request("evaluate", args)

    def step_over(self, thread_id: int | None = None) -> wire.DapMessage:
        return self.request("next", {"threadId": self._thread(thread_id)})

    def continue_(self, thread_id: int | None = None) -> wire.DapMessage:
        return self.request("continue", {"threadId": self._thread(thread_id)})

    def step_out(self, thread_id: int | None = None) -> wire.DapMessage:
        return self.request("stepOut", {"threadId": self._thread(thread_id)})

    def wait_stopped(self, timeout: float | None = None) -> dict[str, Any]:
        msg = self.wait_for(wire.EVENT, event="stopped", timeout=timeout)
        body = msg.body or {}
        if isinstance(body.get("threadId"), int):
            self._last_thread_id = body["threadId"]
        return body

    def _thread(self, thread_id: int | None) -> int:
        return thread_id if thread_id is not None else self._last_thread_id
