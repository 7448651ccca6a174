"""The scripted adapter: program files, protocol behaviour, process mode."""

import json
import subprocess
import sys
import time

import pytest

import oracles
from liverec import wire
from liverec.mockadapter.program import MockProgramError, parse_program
from liverec.mockadapter.server import MockAdapter

RUNNER_LINE = 3


# -- program files -------------------------------------------------------------


def test_parse_program_strips_comments():
    program = parse_program(oracles.FOO_MOCK_SOURCE)
    assert set(program.functions) == {"foo"}
    fn = program.functions["foo"]
    assert fn.params == ("n",)
    assert [s.line for s in fn.steps] == oracles.FOO_SNAPSHOT_LINES
    assert fn.steps[0].var_updates == (("i", "0"),)
    assert fn.steps[-1].value == "3"


def test_parse_program_empty_text_is_empty_program():
    assert parse_program("// only comments\n").functions == {}


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("{not json", "not valid JSON"),
        ('{"functions": []}', "'functions' map"),
        ('{"functions": {"f": []}}', "spec must be an object"),
        ('{"functions": {"f": {"params": [1], "steps": [{"line": 1}]}}}', "params"),
        ('{"functions": {"f": {"steps": []}}}', "non-empty"),
        ('{"functions": {"f": {"steps": [{"set": {}}]}}}', "bad line"),
        ('{"functions": {"f": {"steps": [{"line": 0}]}}}', "bad line"),
        ('{"functions": {"f": {"steps": [{"line": 1, "column": "x"}]}}}', "bad column"),
        ('{"functions": {"f": {"steps": [{"line": 1, "set": {"i": 2}}]}}}', "value texts"),
        ('{"functions": {"f": {"steps": [{"line": 1, "push": "g", "pop": "1"}]}}}', "both push and pop"),
        ('{"functions": {"f": {"steps": [{"line": 1, "push": 7}]}}}', "push target"),
        ('{"functions": {"f": {"steps": [{"line": 1, "push": "f", "args": [1]}]}}}', "list of strings"),
        ('{"functions": {"f": {"steps": [{"line": 1, "pop": 3}]}}}', "string or null"),
        ('{"functions": {"f": {"steps": [{"line": 1, "jump": 4}]}}}', "unknown step keys"),
        ('{"functions": {"f": {"steps": [{"line": 1, "push": "ghost"}]}}}', "not defined"),
    ],
)
def test_parse_program_rejects(body, fragment):
    with pytest.raises(MockProgramError, match=fragment):
        parse_program(body)


# -- in-process protocol driver ------------------------------------------------


class Driver:
    """Sequenced request helper around a MockAdapter instance."""

    def __init__(self, source: str, **kwargs):
        self.adapter = MockAdapter(parse_program(source), program_path="mem.mock", **kwargs)
        self._n = 0

    def req(self, command, arguments=None, *, ok=True):
        self._n += 1
        out = self.adapter.handle(wire.request(self._n, command, arguments))
        resp, events = out[0], out[1:]
        assert resp.kind == "response"
        assert resp.request_seq == self._n
        assert resp.command == command
        if ok is not None:
            assert resp.success is ok, (command, resp.message)
        return resp, events

    def boot(self):
        resp, events = self.req("initialize", {"adapterID": "mock"})
        assert resp.body["supportsConfigurationDoneRequest"] is True
        assert events == []
        _, events = self.req("launch", {})
        assert [e.event for e in events] == ["initialized"]
        self.req(
            "setBreakpoints",
            {"source": {"path": "runner.mock"}, "lines": [RUNNER_LINE]},
        )
        _, events = self.req("configurationDone")
        assert [e.event for e in events] == ["stopped"]
        assert events[0].body["reason"] == "breakpoint"

    def arm_and_call(self, function, args):
        self.req(
            "setFunctionBreakpoints",
            {"breakpoints": [{"name": function}]},
        )
        args_text = ", ".join(args)
        self.req("evaluate", {"expression": f"set_method('{function}', [{args_text}])"})
        _, events = self.req("continue", {"threadId": 1})
        assert events[0].body["reason"] == "function breakpoint"

    def frames(self):
        resp, _ = self.req("stackTrace", {"threadId": 1, "startFrame": 0, "levels": 100})
        return resp.body["stackFrames"]

    def locals_of(self, frame):
        resp, _ = self.req("scopes", {"frameId": frame["id"]})
        ref = resp.body["scopes"][0]["variablesReference"]
        resp, _ = self.req("variables", {"variablesReference": ref})
        return {v["name"]: v["value"] for v in resp.body["variables"]}


def test_requests_before_configuration_fail():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.req("initialize", {})
    resp, _ = d.req("stackTrace", {"threadId": 1}, ok=False)
    assert "not started" in resp.message


def test_unsupported_request_fails_cleanly():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    resp, _ = d.req("attach", {}, ok=False)
    assert "unsupported" in resp.message


def test_launch_sequence_and_idle_stack():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    frames = d.frames()
    assert len(frames) == 1
    assert frames[0]["name"] == "kaa_main"
    assert frames[0]["line"] == RUNNER_LINE
    assert frames[0]["source"]["path"] == "runner.mock"


def test_second_configuration_done_is_idempotent():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    _, events = d.req("configurationDone")
    assert events == []


def test_threads():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    resp, _ = d.req("threads")
    assert resp.body["threads"] == [{"id": 1, "name": "main"}]


def test_step_through_matches_hand_trace():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    d.arm_and_call("foo", ["3"])
    seen = []
    while True:
        top = d.frames()[0]
        if top["name"] != "foo":
            break
        seen.append((top["line"], d.locals_of(top)))
        _, events = d.req("next", {"threadId": 1})
        assert events[0].body["reason"] == "step"
    assert seen == oracles.FOO_SNAPSHOTS

    # after the pop the keep-alive frame holds the return value, two lines on
    top = d.frames()[0]
    assert top["name"] == "kaa_main"
    assert top["line"] == RUNNER_LINE + 2
    assert d.locals_of(top)["__return__"] == oracles.FOO_RETURN

    # continuing settles back onto the idle breakpoint and clears it
    _, events = d.req("continue", {"threadId": 1})
    assert events[0].body["reason"] == "breakpoint"
    top = d.frames()[0]
    assert top["line"] == RUNNER_LINE
    assert "__return__" not in d.locals_of(top)


def test_armed_recursion_stacks_frames():
    d = Driver(oracles.RECURSE_MOCK_SOURCE)
    d.boot()
    d.arm_and_call("down", ["9"])
    d.req("next", {"threadId": 1})  # line 2 -> line 3
    _, events = d.req("next", {"threadId": 1})  # push of an armed callee
    assert events[0].body["reason"] == "function breakpoint"
    names = [f["name"] for f in d.frames()]
    assert names == ["down", "down", "kaa_main"]


def test_unarmed_push_is_invisible_under_step_over():
    source = (
        "// @outer()\n"
        + json.dumps({"functions": {
            "outer": {"params": [], "steps": [
                {"line": 2},
                {"line": 3, "push": "helper"},
                {"line": 4, "pop": "'done'"},
            ]},
            "helper": {"params": [], "steps": [
                {"line": 10, "set": {"h": "1"}},
                {"line": 11, "pop": "'x'"},
            ]},
        }})
    )
    d = Driver(source)
    d.boot()
    d.arm_and_call("outer", [])
    d.req("next", {"threadId": 1})
    _, events = d.req("next", {"threadId": 1})  # steps over the helper call
    assert events[0].body["reason"] == "step"
    top = d.frames()[0]
    assert (top["name"], top["line"]) == ("outer", 4)
    # the callee's return value is observable in the caller's locals
    assert d.locals_of(top)["__return__"] == "'x'"


def test_direct_call_returns_immediately():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    resp, events = d.req("evaluate", {"expression": "foo(3)"})
    assert resp.body["result"] == "3"
    assert events == []
    # the keep-alive frame is untouched afterwards
    top = d.frames()[0]
    assert top["line"] == RUNNER_LINE
    assert "__return__" not in d.locals_of(top)


def test_direct_call_without_return_value():
    source = (
        "// @noop()\n"
        + json.dumps({"functions": {"noop": {"params": [], "steps": [
            {"line": 2},
            {"line": 3, "pop": None},
        ]}}})
    )
    d = Driver(source)
    d.boot()
    resp, _ = d.req("evaluate", {"expression": "noop()"})
    assert resp.body["result"] == "<no value>"


def test_direct_call_stops_when_armed():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    d.req("setFunctionBreakpoints", {"breakpoints": [{"name": "foo"}]})
    resp, events = d.req("evaluate", {"expression": "foo(3)"})
    assert resp.body["result"] == "<calling foo>"
    assert events[0].body["reason"] == "function breakpoint"
    top = d.frames()[0]
    assert (top["name"], top["line"]) == ("foo", 3)


def test_set_method_validates_eagerly():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    resp, _ = d.req("evaluate", {"expression": "set_method('ghost', [])"}, ok=False)
    assert "unknown function" in resp.message


def test_unparseable_expression_fails():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    resp, _ = d.req("evaluate", {"expression": "1 + 2"}, ok=False)
    assert "unsupported expression" in resp.message


def test_runaway_direct_call_hits_budget():
    d = Driver(oracles.SPIN_MOCK_SOURCE)
    d.boot()
    resp, _ = d.req("evaluate", {"expression": "spin()"}, ok=False)
    assert "budget" in resp.message


def test_stale_frame_ids_rejected():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    d.arm_and_call("foo", ["3"])
    old = d.frames()[0]["id"]
    d.req("next", {"threadId": 1})
    resp, _ = d.req("scopes", {"frameId": old}, ok=False)
    assert "stale" in resp.message


def test_step_out_returns_to_caller():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    d.arm_and_call("foo", ["3"])
    _, events = d.req("stepOut", {"threadId": 1})
    assert events[0].body["reason"] == "step"
    assert d.frames()[0]["name"] == "kaa_main"


def test_die_after_steps():
    d = Driver(oracles.FOO_MOCK_SOURCE, die_after_steps=2)
    d.boot()
    d.arm_and_call("foo", ["3"])
    d.req("next", {"threadId": 1})
    d.req("next", {"threadId": 1})
    resp, events = d.req("next", {"threadId": 1})
    assert resp.success is True
    assert [e.event for e in events] == ["terminated"]
    resp, _ = d.req("threads", ok=False)
    assert "terminated" in resp.message


def test_disconnect_emits_terminated():
    d = Driver(oracles.FOO_MOCK_SOURCE)
    d.boot()
    out = d.adapter.handle(wire.request(99, "disconnect"))
    assert out[0].success is True
    assert out[1].event == "terminated"


# -- the real subprocess -------------------------------------------------------


def _transcript() -> bytes:
    reqs = [
        wire.request(1, "initialize", {"adapterID": "mock"}),
        wire.request(2, "launch", {}),
        wire.request(3, "setBreakpoints", {"source": {"path": "r"}, "lines": [RUNNER_LINE]}),
        wire.request(4, "configurationDone"),
        wire.request(5, "setFunctionBreakpoints", {"breakpoints": [{"name": "foo"}]}),
        wire.request(6, "evaluate", {"expression": "set_method('foo', ['3'])"}),
        wire.request(7, "continue", {"threadId": 1}),
        wire.request(8, "stackTrace", {"threadId": 1}),
        wire.request(9, "next", {"threadId": 1}),
        wire.request(10, "stackTrace", {"threadId": 1}),
        wire.request(11, "disconnect"),
    ]
    return b"".join(wire.encode(r) for r in reqs)


def _run_adapter(program_path, extra=(), transcript=None):
    cmd = [sys.executable, "-m", "liverec.mockadapter", "--program", str(program_path), *extra]
    return subprocess.run(
        cmd,
        input=transcript if transcript is not None else _transcript(),
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        timeout=30,
    )


@pytest.fixture()
def foo_program(tmp_path):
    path = tmp_path / "foo.mock"
    path.write_text(oracles.FOO_MOCK_SOURCE)
    return path


def test_subprocess_transcript_is_deterministic(foo_program):
    first = _run_adapter(foo_program)
    second = _run_adapter(foo_program)
    assert first.returncode == 0
    assert first.stdout == second.stdout
    assert len(first.stdout) > 0


def test_subprocess_replies_are_well_formed(foo_program):
    out = _run_adapter(foo_program).stdout
    msgs = wire.decode(out)
    responses = [m for m in msgs if m.kind == "response"]
    assert [r.request_seq for r in responses] == list(range(1, 12))
    assert all(r.success for r in responses)
    seqs = [m.seq for m in msgs]
    assert seqs == sorted(seqs)
    assert len(seqs) == len(set(seqs))
    stack = next(m for m in msgs if m.kind == "response" and m.request_seq == 8)
    assert stack.body["stackFrames"][0]["name"] == "foo"
    assert stack.body["stackFrames"][0]["line"] == oracles.FOO_SNAPSHOT_LINES[0]


def test_subprocess_latency_flag_slows_responses(foo_program):
    transcript = _transcript()
    t0 = time.perf_counter()
    out = _run_adapter(foo_program, extra=["--latency", "20"], transcript=transcript)
    elapsed = time.perf_counter() - t0
    assert out.returncode == 0
    # 11 responses at >=20ms each; generous lower bound to stay unflaky
    assert elapsed >= 0.2
