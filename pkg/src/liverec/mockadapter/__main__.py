"""Entry point: ``mock-adapter [--program FILE] [--latency MS] [--die-after-steps N]``."""

from __future__ import annotations

import argparse
import sys

from .program import load_program
from .server import MockAdapter, serve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mock-adapter",
        description="Scripted debug adapter speaking the wire protocol on stdio.",
    )
    parser.add_argument("--program", help="scripted program file to preload")
    parser.add_argument("--latency", type=float, default=0.0, metavar="MS",
                        help="fixed delay before every response, in milliseconds")
    parser.add_argument("--die-after-steps", type=int, default=0, metavar="N",
                        help="emit a terminated event after N step requests (testing aid)")
    args = parser.parse_args(argv)

    program = load_program(args.program) if args.program else None
    adapter = MockAdapter(
        program=program,
        program_path=args.program,
        latency=args.latency,
        die_after_steps=args.die_after_steps,
    )
    serve(adapter, sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
