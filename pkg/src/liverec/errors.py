"""Exception types shared across the probe engine."""

from __future__ import annotations


class LiveRecError(Exception):
    """Base class for all engine errors."""


class EncodeError(LiveRecError):
    """A message could not be serialized to the wire format."""


class ProtocolError(LiveRecError):
    """The byte stream violated the wire format; the stream is unusable afterwards."""


class AnnotationError(LiveRecError):
    """A probe annotation was present but malformed."""


class LaunchError(LiveRecError):
    """The adapter process could not be started (or was started twice)."""


class SessionClosed(LiveRecError):
    """Operation attempted on a dead session."""


class SessionTimeout(LiveRecError):
    """No matching message arrived within the per-request timeout."""


class DebuggeeTerminated(LiveRecError):
    """The debuggee (or the adapter stream) went away while we still needed it."""

    def __init__(self, message: str = "debuggee terminated"):
        super().__init__(message)


class CompileError(LiveRecError):
    """Compilation of probed source failed; the message carries the compiler diagnostics."""


class LoadError(LiveRecError):
    """The debuggee rejected a code (re)load."""


class InvokeError(LiveRecError):
    """The trigger expression for a probe was rejected by the adapter."""


class InvokeTimeout(LiveRecError):
    """Execution never arrived in the probed function."""


class BackendUnavailable(LiveRecError):
    """The backend's toolchain (adapter, compiler, ...) is missing on this machine."""
