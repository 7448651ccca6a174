"""A deterministic, scripted debug adapter used as the hermetic test backend."""

from .program import MockProgram, MockFunction, MockStep, MockProgramError, parse_program
from .server import MockAdapter, serve

__all__ = [
    "MockProgram",
    "MockFunction",
    "MockStep",
    "MockProgramError",
    "parse_program",
    "MockAdapter",
    "serve",
]
