"""Command line front: probe a file once, serve the live API, or run benches."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import backends, bench, service
from .recorder import max_steps_from_env


def _parse_sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list: {text!r}")
    if not sizes:
        raise argparse.ArgumentTypeError("size list is empty")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liverec",
        description="Probe annotated functions through a debug adapter and "
                    "record how their stack frames evolve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    probe = sub.add_parser("probe", help="run one probe and print the result as JSON")
    probe.add_argument("file", help="annotated source file")
    probe.add_argument("--language", help="backend language (default: inferred from the file extension)")
    probe.add_argument("--max-steps", type=int, default=None, help="recording step cap (default 80)")
    probe.add_argument("--out", default="-", help="output path, - for stdout")
    probe.set_defaults(func=_cmd_probe)

    serve = sub.add_parser("serve", help="serve the HTTP/WebSocket API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8077)
    serve.add_argument("--workdir", default=None, help="working directory for sessions (default: temp)")
    serve.add_argument("--max-steps", type=int, default=None)
    serve.add_argument("--ui", default=None, metavar="DIR",
                       help="also serve this directory of static files (the built frontend)")
    serve.set_defaults(func=_cmd_serve)

    bench_parser = sub.add_parser("bench", help="benchmarks and scenario replay")
    bench_sub = bench_parser.add_subparsers(dest="bench_command", required=True)

    replay = bench_sub.add_parser("replay", help="replay a scripted editing session")
    replay.add_argument("--scenario", default="binary_search_mock",
                        help="packaged scenario name or a path to a scenario file")
    replay.add_argument("--max-steps", type=int, default=None)
    replay.add_argument("--out", default=None, help="also write rows as CSV")
    replay.set_defaults(func=_cmd_bench_replay)

    steps = bench_sub.add_parser("steps", help="recording time vs executed steps")
    steps.add_argument("--sizes", type=_parse_sizes, default=(10, 50, 100, 200))
    steps.add_argument("--out", default=None)
    steps.set_defaults(func=_cmd_bench_steps)

    compile_ = bench_sub.add_parser("compile", help="compile-and-load time vs source size")
    compile_.add_argument("--sizes", type=_parse_sizes, default=(1, 8, 32, 128))
    compile_.add_argument("--out", default=None)
    compile_.set_defaults(func=_cmd_bench_compile)

    latency = bench_sub.add_parser("latency", help="adapter round-trip latency")
    latency.add_argument("--n", type=int, default=200)
    latency.add_argument("--latency-ms", type=int, default=1,
                         help="latency injected into the mock adapter")
    latency.add_argument("--out", default=None)
    latency.set_defaults(func=_cmd_bench_latency)

    return parser


def _infer_language(path: Path) -> str:
    for language, backend in backends.load_backends().items():
        if path.suffix == backend.source_extension:
            return language
    raise SystemExit(
        f"cannot infer a language from {path.suffix!r}; pass --language "
        f"(have: {', '.join(sorted(backends.load_backends()))})"
    )


def _cmd_probe(args: argparse.Namespace) -> int:
    path = Path(args.file)
    source = path.read_text(encoding="utf-8")
    language = args.language or _infer_language(path)
    with service.ProbeEngine(max_steps=args.max_steps) as engine:
        result = engine.submit(source, language)
    payload = json.dumps(service.probe_result_to_json(result), indent=2)
    if args.out == "-":
        print(payload)
    else:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    if result.outcome == service.RECORDING:
        return 0
    if result.outcome in (service.ANNOTATION_ERROR, service.COMPILE_ERROR):
        print(f"{result.outcome}: {result.error}", file=sys.stderr)
        return 2
    print(f"{result.outcome}: {result.error}", file=sys.stderr)
    return 1


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    if args.ui is not None and not Path(args.ui).is_dir():
        raise SystemExit(f"--ui: {args.ui!r} is not a directory")
    app = service.create_app(workdir=args.workdir, max_steps=args.max_steps, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_bench_replay(args: argparse.Namespace) -> int:
    scenario = bench.load_scenario(args.scenario)
    max_steps = args.max_steps if args.max_steps is not None else max_steps_from_env()
    with service.ProbeEngine(max_steps=max_steps) as engine:
        rows, _ = bench.replay(engine, scenario)
    print(f"{'step':>4} {'kind':<6} {'ms':>6} {'outcome':<16} {'status':<12} {'return':<8} {'snaps':>5}  result")
    for row in rows:
        verdict = "ok" if row.ok else f"MISMATCH: {row.detail}"
        print(f"{row.index:>4} {row.kind:<6} {row.elapsed_ms:>6.0f} {row.outcome:<16} "
              f"{row.status:<12} {row.return_value:<8} {row.snapshots:>5}  {verdict}")
    good = sum(1 for row in rows if row.ok)
    total_ms = sum(row.elapsed_ms for row in rows)
    print(f"replayed {len(rows)} steps in {total_ms:.0f} ms ({good}/{len(rows)} matched)")
    if args.out:
        bench.write_csv(args.out, rows)
    return 0 if good == len(rows) else 1


def _cmd_bench_steps(args: argparse.Namespace) -> int:
    rows = bench.step_scaling(sizes=args.sizes)
    print(f"{'k':>6} {'ms':>8} {'snapshots':>10}")
    for row in rows:
        print(f"{row.k:>6} {row.elapsed_ms:>8.0f} {row.snapshots:>10}")
    if args.out:
        bench.write_csv(args.out, rows)
    return 0


def _cmd_bench_compile(args: argparse.Namespace) -> int:
    rows = bench.compile_scaling(sizes=args.sizes)
    print(f"{'functions':>10} {'bytes':>8} {'ms':>8}")
    for row in rows:
        print(f"{row.functions:>10} {row.source_bytes:>8} {row.elapsed_ms:>8.0f}")
    if args.out:
        bench.write_csv(args.out, rows)
    return 0


def _cmd_bench_latency(args: argparse.Namespace) -> int:
    stats = bench.roundtrip_latency(n=args.n, latency_ms=args.latency_ms)
    print(f"n={stats.n} injected={stats.injected_ms}ms "
          f"median={stats.median_ms:.2f}ms mean={stats.mean_ms:.2f}ms "
          f"p90={stats.p90_ms:.2f}ms min={stats.min_ms:.2f}ms max={stats.max_ms:.2f}ms")
    if args.out:
        bench.write_csv(args.out, [stats])
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
