"""Benchmarks and scripted editing-session replay.

A scenario is a JSON file describing one editing session as a list of full
buffer states: each step is what the editor contained after one edit, tagged
as a ``code`` edit (the program changed) or an ``input`` edit (only the probe
annotation changed). Replay pushes every step through the engine exactly like
an editor would and reports per-step timing plus whether the result matched
the step's embedded expectations.

The other entry points measure the engine's cost model directly: recording
time as a function of executed steps, compile-and-load time as a function of
source size, and raw adapter round-trip latency.
"""

from __future__ import annotations

import json
import statistics
import tempfile
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

from . import backends
from .service import ProbeEngine, ProbeResult

_SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"

CODE = "code"
INPUT = "input"


@dataclass(frozen=True)
class ScenarioStep:
    index: int
    kind: str  # CODE or INPUT
    label: str
    source: str
    expect: dict[str, Any]


@dataclass(frozen=True)
class Scenario:
    name: str
    language: str
    steps: tuple[ScenarioStep, ...]


def scenario_path(name: str) -> Path:
    return _SCENARIO_DIR / f"{name}.json"


def packaged_scenarios() -> list[str]:
    return sorted(p.stem for p in _SCENARIO_DIR.glob("*.json"))


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario by packaged name or by explicit path."""
    path = Path(name_or_path)
    if not path.is_file():
        packaged = scenario_path(str(name_or_path))
        if not packaged.is_file():
            raise FileNotFoundError(
                f"no scenario {name_or_path!r} (packaged: {', '.join(packaged_scenarios())})"
            )
        path = packaged
    data = json.loads(path.read_text(encoding="utf-8"))
    steps = []
    for position, raw in enumerate(data["steps"], start=1):
        step = ScenarioStep(
            index=int(raw["index"]),
            kind=raw["kind"],
            label=raw.get("label", ""),
            source=raw["source"],
            expect=dict(raw.get("expect", {})),
        )
        if step.index != position:
            raise ValueError(f"{path.name}: step {position} has index {step.index}")
        if step.kind not in (CODE, INPUT):
            raise ValueError(f"{path.name}: step {position} has kind {step.kind!r}")
        if not step.source.strip():
            raise ValueError(f"{path.name}: step {position} has an empty source")
        steps.append(step)
    if not steps:
        raise ValueError(f"{path.name}: scenario has no steps")
    return Scenario(name=data["name"], language=data["language"], steps=tuple(steps))


@dataclass
class ReplayRow:
    index: int
    kind: str
    label: str
    elapsed_ms: float
    outcome: str
    status: str
    return_value: str
    snapshots: int
    ok: bool
    detail: str


def _check_expectations(result: ProbeResult, expect: dict[str, Any]) -> tuple[bool, str]:
    problems = []
    recording = result.recording
    if "outcome" in expect and result.outcome != expect["outcome"]:
        problems.append(f"outcome {result.outcome!r} != {expect['outcome']!r}")
    if "status" in expect:
        status = recording.status if recording is not None else None
        if status != expect["status"]:
            problems.append(f"status {status!r} != {expect['status']!r}")
    if "return" in expect:
        got = recording.return_value if recording is not None else None
        if got != expect["return"]:
            problems.append(f"return {got!r} != {expect['return']!r}")
    if "snapshots" in expect:
        count = len(recording.snapshots) if recording is not None else 0
        if count != expect["snapshots"]:
            problems.append(f"snapshots {count} != {expect['snapshots']}")
    return (not problems, "; ".join(problems))


def replay(engine: ProbeEngine, scenario: Scenario) -> tuple[list[ReplayRow], list[ProbeResult]]:
    """Submit every scenario step in order; one row (and raw result) per step."""
    rows: list[ReplayRow] = []
    results: list[ProbeResult] = []
    for step in scenario.steps:
        started = time.perf_counter()
        result = engine.submit(step.source, scenario.language)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        ok, detail = _check_expectations(result, step.expect)
        recording = result.recording
        rows.append(ReplayRow(
            index=step.index,
            kind=step.kind,
            label=step.label,
            elapsed_ms=elapsed_ms,
            outcome=result.outcome,
            status=recording.status if recording is not None else "",
            return_value=recording.return_value if recording is not None and recording.return_value is not None else "",
            snapshots=len(recording.snapshots) if recording is not None else 0,
            ok=ok,
            detail=detail,
        ))
        results.append(result)
    return rows, results


# -- recording cost vs executed steps -----------------------------------------

def synthetic_walk_source(k: int) -> str:
    """A mock program whose probe executes exactly ``k`` recorded steps."""
    if k < 1:
        raise ValueError("k must be >= 1")
    steps: list[dict[str, Any]] = []
    for i in range(k - 1):
        steps.append({"line": 2 + i, "set": {"i": str(i)}})
    steps.append({"line": 1 + k, "pop": str(k - 1)})
    program = {"functions": {"walk": {"params": ["n"], "steps": steps}}}
    return "// @walk(0)\n" + json.dumps(program) + "\n"


@dataclass
class StepScalingRow:
    k: int
    elapsed_ms: float
    snapshots: int


def step_scaling(
    sizes: tuple[int, ...] = (10, 50, 100, 200),
    workdir: str | Path | None = None,
) -> list[StepScalingRow]:
    """Wall time of one probe as the recorded step count grows."""
    rows: list[StepScalingRow] = []
    with ProbeEngine(workdir=workdir, max_steps=max(sizes) + 10) as engine:
        engine.submit(synthetic_walk_source(2), "mock")  # absorb session launch
        for k in sizes:
            started = time.perf_counter()
            result = engine.submit(synthetic_walk_source(k), "mock")
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            count = len(result.recording.snapshots) if result.recording else 0
            rows.append(StepScalingRow(k=k, elapsed_ms=elapsed_ms, snapshots=count))
    return rows


# -- compile-and-load cost vs source size -------------------------------------

def _padded_program_source(extra_functions: int) -> str:
    functions: dict[str, Any] = {
        "target": {"params": [], "steps": [{"line": 1, "pop": "0"}]},
    }
    for i in range(extra_functions):
        functions[f"pad_{i}"] = {
            "params": ["x"],
            "steps": [{"line": 1, "set": {"y": str(i)}}, {"line": 2, "pop": str(i)}],
        }
    return "// @target()\n" + json.dumps({"functions": functions}) + "\n"


@dataclass
class CompileScalingRow:
    functions: int
    source_bytes: int
    elapsed_ms: float


def compile_scaling(
    sizes: tuple[int, ...] = (1, 8, 32, 128),
    workdir: str | Path | None = None,
) -> list[CompileScalingRow]:
    """Compile-and-load wall time as the (mock) source grows."""
    base = Path(workdir) if workdir is not None else Path(tempfile.mkdtemp(prefix="liverec-bench-"))
    backend = backends.get_backend("mock")
    session = backends.build_session(backend, base)
    session.launch()
    rows: list[CompileScalingRow] = []
    try:
        for size in sizes:
            source = _padded_program_source(size)
            started = time.perf_counter()
            artifact = backends.compile_source(backend, source, base)
            backends.load_code(backend, session, artifact)
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            rows.append(CompileScalingRow(
                functions=size,
                source_bytes=len(source.encode("utf-8")),
                elapsed_ms=elapsed_ms,
            ))
    finally:
        session.close()
    return rows


# -- raw adapter round-trip latency -------------------------------------------

@dataclass
class LatencyStats:
    n: int
    injected_ms: int
    median_ms: float
    mean_ms: float
    p90_ms: float
    min_ms: float
    max_ms: float


def roundtrip_latency(
    n: int = 200,
    latency_ms: int = 1,
    workdir: str | Path | None = None,
) -> LatencyStats:
    """Round-trip time of a minimal request against the mock adapter.

    ``latency_ms`` is injected into the adapter (its --latency flag), so the
    measured median should sit just above it: the difference is the engine's
    own wire overhead.
    """
    base = Path(workdir) if workdir is not None else Path(tempfile.mkdtemp(prefix="liverec-bench-"))
    backend = backends.get_backend("mock")
    session = backends.build_session(backend, base)
    if latency_ms > 0:
        session.config.adapter_launch += ["--latency", str(latency_ms)]
    session.launch()
    try:
        for _ in range(10):
            session.request("threads")
        samples: list[float] = []
        for _ in range(n):
            started = time.perf_counter()
            session.request("threads")
            samples.append((time.perf_counter() - started) * 1000.0)
    finally:
        session.close()
    samples.sort()
    return LatencyStats(
        n=n,
        injected_ms=latency_ms,
        median_ms=statistics.median(samples),
        mean_ms=statistics.fmean(samples),
        p90_ms=samples[min(len(samples) - 1, int(len(samples) * 0.9))],
        min_ms=samples[0],
        max_ms=samples[-1],
    )


# -- output -------------------------------------------------------------------

def write_csv(path: str | Path, rows: list[Any]) -> None:
    """Write dataclass rows as CSV; *_ms columns are rounded to whole ms."""
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    names = [f.name for f in fields(rows[0])]
    lines = [",".join(names)]
    for row in rows:
        d = asdict(row)
        cells = []
        for name in names:
            value = d[name]
            if name.endswith("_ms") and isinstance(value, float):
                value = int(round(value))
            cells.append(_csv_cell(value))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _csv_cell(value: Any) -> str:
    text = "" if value is None else str(value)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text
