"""Scripted programs for the mock adapter.

A program file encodes *executions*, not code: each function is an unrolled
trace of steps, one per debugger stop. Stops show the state *before* the step
runs; a step's ``set`` updates apply when execution leaves it. A step list
whose last action is a plain fall-through wraps back to step 0 — that is how a
whole-body ``while(true)`` is written with three action kinds.

File format: optional ``//`` comment lines (the probe annotation lives here),
then one JSON object::

    {"functions": {"foo": {"params": ["n"], "steps": [
        {"line": 3, "set": {"i": "0"}},
        {"line": 4},
        {"line": 7, "pop": "3"}
    ]}}}

Step actions: default fall-through; ``"push": "callee"`` (+ optional
``"args": [...]``) calls another scripted function; ``"pop": <text or null>``
returns from the function. ``column`` defaults to 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import LiveRecError

STAY = "stay"
PUSH = "push"
POP = "pop"


class MockProgramError(LiveRecError):
    """The program file does not describe a valid scripted execution."""


@dataclass(frozen=True)
class MockStep:
    line: int
    column: int = 1
    var_updates: tuple[tuple[str, str], ...] = ()
    action: str = STAY
    target: str | None = None          # push: callee name
    call_args: tuple[str, ...] = ()    # push: verbatim argument texts
    value: str | None = None           # pop: return value text (None = no value)


@dataclass(frozen=True)
class MockFunction:
    name: str
    params: tuple[str, ...]
    steps: tuple[MockStep, ...]


@dataclass(frozen=True)
class MockProgram:
    functions: dict[str, MockFunction] = field(default_factory=dict)


def _parse_step(fn_name: str, index: int, obj: object) -> MockStep:
    if not isinstance(obj, dict):
        raise MockProgramError(f"{fn_name}[{index}]: step must be an object, got {obj!r}")
    rest = dict(obj)
    line = rest.pop("line", None)
    if not isinstance(line, int) or line < 1:
        raise MockProgramError(f"{fn_name}[{index}]: bad line: {line!r}")
    column = rest.pop("column", 1)
    if not isinstance(column, int):
        raise MockProgramError(f"{fn_name}[{index}]: bad column: {column!r}")
    updates = rest.pop("set", {})
    if not isinstance(updates, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in updates.items()
    ):
        raise MockProgramError(f"{fn_name}[{index}]: 'set' must map names to value texts")
    action, target, call_args, value = STAY, None, (), None
    if "push" in rest and "pop" in rest:
        raise MockProgramError(f"{fn_name}[{index}]: step cannot both push and pop")
    if "push" in rest:
        action = PUSH
        target = rest.pop("push")
        if not isinstance(target, str):
            raise MockProgramError(f"{fn_name}[{index}]: push target must be a string")
        raw_args = rest.pop("args", [])
        if not isinstance(raw_args, list) or not all(isinstance(a, str) for a in raw_args):
            raise MockProgramError(f"{fn_name}[{index}]: push args must be a list of strings")
        call_args = tuple(raw_args)
    elif "pop" in rest:
        action = POP
        value = rest.pop("pop")
        if value is not None and not isinstance(value, str):
            raise MockProgramError(f"{fn_name}[{index}]: pop value must be a string or null")
    if rest:
        raise MockProgramError(f"{fn_name}[{index}]: unknown step keys: {sorted(rest)}")
    return MockStep(
        line=line,
        column=column,
        var_updates=tuple(updates.items()),
        action=action,
        target=target,
        call_args=call_args,
        value=value,
    )


def parse_program(text: str) -> MockProgram:
    """Parse program text (``//`` comment lines stripped, then JSON)."""
    body = "\n".join(
        line for line in text.splitlines() if not line.lstrip().startswith("//")
    )
    try:
        obj = json.loads(body or "{}")
    except json.JSONDecodeError as exc:
        raise MockProgramError(f"program is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or not isinstance(obj.get("functions", {}), dict):
        raise MockProgramError("program must be an object with a 'functions' map")
    functions: dict[str, MockFunction] = {}
    for name, spec in obj.get("functions", {}).items():
        if not isinstance(spec, dict):
            raise MockProgramError(f"{name}: function spec must be an object")
        params = spec.get("params", [])
        if not isinstance(params, list) or not all(isinstance(p, str) for p in params):
            raise MockProgramError(f"{name}: params must be a list of names")
        raw_steps = spec.get("steps")
        if not isinstance(raw_steps, list) or not raw_steps:
            raise MockProgramError(f"{name}: needs a non-empty list of steps")
        steps = tuple(_parse_step(name, i, s) for i, s in enumerate(raw_steps))
        functions[name] = MockFunction(name=name, params=tuple(params), steps=steps)
    for fn in functions.values():
        for i, step in enumerate(fn.steps):
            if step.action == PUSH and step.target not in functions:
                raise MockProgramError(
                    f"{fn.name}[{i}]: push target {step.target!r} is not defined"
                )
    return MockProgram(functions=functions)


def load_program(path: str) -> MockProgram:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_program(fh.read())
