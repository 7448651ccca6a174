#!/usr/bin/env python3
"""Regenerate the packaged editing-session scenarios.

The session story: a binary search over ['a'..'f'] is typed out live. Code
edits grow the function stage by stage; input edits only re-aim the probe
annotation at a different key. The mock variant carries an unrolled execution
trace per step — the mock adapter replays traces rather than executing code —
produced here by simulating the pseudo-code each stage shows. The python
variant is real source for the debugpy lane.

Run from the repository root:  python3 tools/gen_scenarios.py
"""

from __future__ import annotations

import json
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "liverec" / "scenarios"

VALUES = ["a", "b", "c", "d", "e", "f"]
VALUES_TEXT_MOCK = "['a','b','c','d','e','f']"
VALUES_TEXT_PY = "['a', 'b', 'c', 'd', 'e', 'f']"

# Stage number -> the pseudo-code listing the editor shows at that point.
# Listing line N lands on file line N, so trace lines address the listing.
MOCK_LISTINGS = {
    1: """\
binary_search(values, key) {
}""",
    2: """\
binary_search(values, key) {
    low = 0
}""",
    3: """\
binary_search(values, key) {
    low = 0
    high = values.length - 1
}""",
    4: """\
binary_search(values, key) {
    low = 0
    high = values.length - 1
    mid = (low + high) / 2
}""",
    5: """\
binary_search(values, key) {
    low = 0
    high = values.length - 1
    mid = floor((low + high) / 2)
}""",
    6: """\
binary_search(values, key) {
    low = 0
    high = values.length - 1
    mid = floor((low + high) / 2)
    value = values[mid]
}""",
    7: """\
binary_search(values, key) {
    low = 0
    high = values.length - 1
    mid = floor((low + high) / 2)
    value = values[mid]

    if (value < key) {
        low = mid + 1
    }
}""",
    8: """\
binary_search(values, key) {
    low = 0
    high = values.length - 1
    mid = floor((low + high) / 2)
    value = values[mid]

    if (value < key) {
        low = mid + 1
    }
    else if (value > key) {
        high = mid - 1
    }
    else {
        return mid
    }
}""",
    11: """\
binary_search(values, key) {
    low = 0
    high = values.length - 1

    while (true) {
        mid = floor((low + high) / 2)
        value = values[mid]

        if (value < key) {
            low = mid + 1
        }
        else if (value > key) {
            high = mid - 1
        }
        else {
            return mid
        }
    }
}""",
    17: """\
binary_search(values, key) {
    low = 0
    high = values.length - 1

    while (low <= high) {
        mid = floor((low + high) / 2)
        value = values[mid]

        if (value < key) {
            low = mid + 1
        }
        else if (value > key) {
            high = mid - 1
        }
        else {
            return mid
        }
    }

    return -1
}""",
}

PY_LISTINGS = {
    1: """\
def binary_search(values, key):
    pass""",
    2: """\
def binary_search(values, key):
    low = 0""",
    3: """\
def binary_search(values, key):
    low = 0
    high = len(values) - 1""",
    4: """\
def binary_search(values, key):
    low = 0
    high = len(values) - 1
    mid = (low + high) / 2""",
    5: """\
def binary_search(values, key):
    low = 0
    high = len(values) - 1
    mid = (low + high) // 2""",
    6: """\
def binary_search(values, key):
    low = 0
    high = len(values) - 1
    mid = (low + high) // 2
    value = values[mid]""",
    7: """\
def binary_search(values, key):
    low = 0
    high = len(values) - 1
    mid = (low + high) // 2
    value = values[mid]
    if value < key:
        low = mid + 1""",
    8: """\
def binary_search(values, key):
    low = 0
    high = len(values) - 1
    mid = (low + high) // 2
    value = values[mid]
    if value < key:
        low = mid + 1
    elif value > key:
        high = mid - 1
    else:
        return mid""",
    11: """\
def binary_search(values, key):
    low = 0
    high = len(values) - 1
    while True:
        mid = (low + high) // 2
        value = values[mid]
        if value < key:
            low = mid + 1
        elif value > key:
            high = mid - 1
        else:
            return mid""",
    17: """\
def binary_search(values, key):
    low = 0
    high = len(values) - 1
    while low <= high:
        mid = (low + high) // 2
        value = values[mid]
        if value < key:
            low = mid + 1
        elif value > key:
            high = mid - 1
        else:
            return mid
    return -1""",
}

# (index, kind, stage, key, label)
STEPS = [
    (1, "code", 1, "d", "declare binary_search and probe it"),
    (2, "code", 2, "d", "initialize low"),
    (3, "code", 3, "d", "initialize high"),
    (4, "code", 4, "d", "compute mid"),
    (5, "code", 5, "d", "floor mid"),
    (6, "code", 6, "d", "read value at mid"),
    (7, "code", 7, "d", "narrow upward when value < key"),
    (8, "code", 8, "d", "full comparison: narrow or return"),
    (9, "input", 8, "b", "try key 'b'"),
    (10, "input", 8, "c", "try key 'c'"),
    (11, "code", 11, "d", "wrap the comparison in a loop"),
    (12, "input", 11, "a", "try key 'a'"),
    (13, "input", 11, "b", "try key 'b'"),
    (14, "input", 11, "e", "try key 'e'"),
    (15, "input", 11, "f", "try key 'f'"),
    (16, "input", 11, "g", "try key 'g' - the loop never exits"),
    (17, "code", 17, "g", "bound the loop and return -1"),
    (18, "input", 17, "d", "try key 'd'"),
    (19, "input", 17, "a", "try key 'a'"),
]

UNROLLED_ITERATIONS = 30  # far past the default 80-step recording cap


def quoted(ch: str) -> str:
    return f"'{ch}'"


def simulate(stage: int, key: str) -> tuple[list[dict], bool, str | None]:
    """Replay the stage's pseudo-code on VALUES/key.

    Returns (trace steps, terminated, return text). A step's "set" applies on
    leaving it, matching the mock adapter's stop-before-execute rule. For the
    non-terminating case the steady loop is unrolled UNROLLED_ITERATIONS times.
    """
    steps: list[dict] = []

    def at(line: int, sets: dict[str, str] | None = None) -> None:
        entry: dict = {"line": line}
        if sets:
            entry["set"] = dict(sets)
        steps.append(entry)

    def ret(line: int, value: str | None) -> tuple[list[dict], bool, str | None]:
        steps.append({"line": line, "pop": value})
        return steps, True, value

    if stage == 1:
        return ret(2, None)
    if stage == 2:
        at(2, {"low": "0"})
        return ret(3, None)
    if stage == 3:
        at(2, {"low": "0"})
        at(3, {"high": "5"})
        return ret(4, None)
    if stage in (4, 5, 6):
        at(2, {"low": "0"})
        at(3, {"high": "5"})
        at(4, {"mid": "2.5" if stage == 4 else "2"})
        if stage == 6:
            at(5, {"value": quoted(VALUES[2])})
            return ret(6, None)
        return ret(5, None)
    if stage in (7, 8):
        mid = (0 + 5) // 2
        value = VALUES[mid]
        at(2, {"low": "0"})
        at(3, {"high": "5"})
        at(4, {"mid": str(mid)})
        at(5, {"value": quoted(value)})
        at(7)  # if condition
        close = 10 if stage == 7 else 16
        if value < key:
            at(8, {"low": str(mid + 1)})
            return ret(close, None)
        if stage == 7:
            return ret(close, None)
        at(10)  # else-if condition
        if value > key:
            at(11, {"high": str(mid - 1)})
            return ret(close, None)
        return ret(14, str(mid))

    # stages 11 (while true) and 17 (bounded loop)
    low, high = 0, 5
    at(2, {"low": "0"})
    at(3, {"high": "5"})
    for _ in range(UNROLLED_ITERATIONS):
        at(5)  # loop condition
        if stage == 17 and not (low <= high):
            return ret(20, "-1")
        mid = (low + high) // 2
        at(6, {"mid": str(mid)})
        value = VALUES[mid]
        at(7, {"value": quoted(value)})
        at(9)  # if condition
        if value < key:
            low = mid + 1
            at(10, {"low": str(low)})
        elif value > key:
            at(12)  # else-if condition
            high = mid - 1
            at(13, {"high": str(high)})
        else:
            at(12)
            return ret(16, str(mid))
    return steps, False, None


def mock_source(stage: int, key: str, trace: list[dict]) -> str:
    lines = [("// " + text).rstrip() for text in MOCK_LISTINGS[stage].splitlines()]
    lines.append("//")
    lines.append(f"// @binary_search({VALUES_TEXT_MOCK}, '{key}')")
    program = {"functions": {"binary_search": {"params": ["values", "key"], "steps": trace}}}
    lines.append(json.dumps(program))
    return "\n".join(lines) + "\n"


def python_source(stage: int, key: str) -> str:
    return (
        PY_LISTINGS[stage]
        + "\n\n\n"
        + f"# @binary_search({VALUES_TEXT_PY}, '{key}')\n"
    )


def build_scenario(language: str) -> dict:
    steps_out = []
    for index, kind, stage, key, label in STEPS:
        trace, terminated, ret_text = simulate(stage, key)
        if language == "mock":
            source = mock_source(stage, key, trace)
            if terminated:
                expect = {
                    "outcome": "recording",
                    "status": "completed",
                    "return": ret_text,
                    "snapshots": len(trace),
                }
            else:
                expect = {
                    "outcome": "recording",
                    "status": "interrupted",
                    "return": None,
                    "snapshots": 80,
                }
        else:
            source = python_source(stage, key)
            if terminated:
                expect = {
                    "outcome": "recording",
                    "status": "completed",
                    "return": ret_text if ret_text is not None else "None",
                }
            else:
                expect = {
                    "outcome": "recording",
                    "status": "interrupted",
                    "return": None,
                    "snapshots": 80,
                }
        steps_out.append({
            "index": index,
            "kind": kind,
            "label": label,
            "source": source,
            "expect": expect,
        })
    return {
        "name": f"binary_search_{language}",
        "language": language,
        "steps": steps_out,
    }


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for language in ("mock", "python"):
        scenario = build_scenario(language)
        path = OUT_DIR / f"{scenario['name']}.json"
        path.write_text(json.dumps(scenario, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path} ({len(scenario['steps'])} steps)")


if __name__ == "__main__":
    main()
