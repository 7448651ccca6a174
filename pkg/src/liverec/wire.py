"""Codec for the length-prefixed JSON messages debug adapters speak.

Every message travels as ``Content-Length: <n>\\r\\n\\r\\n<utf-8 json body>``.
Bodies are requests, responses, or events; unknown top-level fields are kept
so foreign adapters with protocol extensions round-trip unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import EncodeError, ProtocolError

REQUEST = "request"
RESPONSE = "response"
EVENT = "event"

_KINDS = (REQUEST, RESPONSE, EVENT)
_HEADER_END = b"\r\n\r\n"
_MAX_HEADER_BYTES = 1 << 16


@dataclass(frozen=True)
class DapMessage:
    """One protocol message. Fields that do not apply to a kind stay None."""

    kind: str
    seq: int
    command: str | None = None
    request_seq: int | None = None
    success: bool | None = None
    message: str | None = None
    event: str | None = None
    arguments: Any = None
    body: Any = None
    extra: dict[str, Any] = field(default_factory=dict)


def request(seq: int, command: str, arguments: Any = None) -> DapMessage:
    return DapMessage(kind=REQUEST, seq=seq, command=command, arguments=arguments)


def response(
    seq: int,
    request_seq: int,
    success: bool,
    command: str,
    body: Any = None,
    message: str | None = None,
) -> DapMessage:
    return DapMessage(
        kind=RESPONSE,
        seq=seq,
        request_seq=request_seq,
        success=success,
        command=command,
        body=body,
        message=message,
    )


def event(seq: int, name: str, body: Any = None) -> DapMessage:
    return DapMessage(kind=EVENT, seq=seq, event=name, body=body)


class SeqCounter:
    """Monotonic sequence numbers; the first call returns 1."""

    def __init__(self) -> None:
        self._last = 0

    def next_seq(self) -> int:
        self._last += 1
        return self._last

    @property
    def last(self) -> int:
        return self._last


def _validate(msg: DapMessage) -> None:
    if msg.kind not in _KINDS:
        raise EncodeError(f"unknown message kind: {msg.kind!r}")
    if not isinstance(msg.seq, int) or msg.seq < 1:
        raise EncodeError(f"seq must be a positive integer, got {msg.seq!r}")
    if msg.kind == REQUEST and not msg.command:
        raise EncodeError("request without a command")
    if msg.kind == RESPONSE:
        if not msg.command:
            raise EncodeError("response without a command")
        if not isinstance(msg.request_seq, int) or msg.request_seq < 1:
            raise EncodeError(f"response with bad request_seq: {msg.request_seq!r}")
        if not isinstance(msg.success, bool):
            raise EncodeError(f"response with non-bool success: {msg.success!r}")
    if msg.kind == EVENT and not msg.event:
        raise EncodeError("event without an event name")


def to_json_obj(msg: DapMessage) -> dict[str, Any]:
    obj: dict[str, Any] = {"seq": msg.seq, "type": msg.kind}
    if msg.kind == REQUEST:
        obj["command"] = msg.command
        if msg.arguments is not None:
            obj["arguments"] = msg.arguments
    elif msg.kind == RESPONSE:
        obj["request_seq"] = msg.request_seq
        obj["success"] = msg.success
        obj["command"] = msg.command
        if msg.message is not None:
            obj["message"] = msg.message
        if msg.body is not None:
            obj["body"] = msg.body
    else:
        obj["event"] = msg.event
        if msg.body is not None:
            obj["body"] = msg.body
    obj.update(msg.extra)
    return obj


def from_json_obj(obj: Any) -> DapMessage:
    if not isinstance(obj, dict):
        raise ProtocolError(f"message body is not an object: {obj!r}")
    rest = dict(obj)
    kind = rest.pop("type", None)
    if kind not in _KINDS:
        raise ProtocolError(f"unknown message type: {kind!r}")
    seq = rest.pop("seq", 0)
    if not isinstance(seq, int):
        raise ProtocolError(f"non-integer seq: {seq!r}")
    fields: dict[str, Any] = {"kind": kind, "seq": seq}
    if kind == REQUEST:
        fields["command"] = rest.pop("command", None)
        fields["arguments"] = rest.pop("arguments", None)
    elif kind == RESPONSE:
        fields["command"] = rest.pop("command", None)
        fields["request_seq"] = rest.pop("request_seq", None)
        fields["success"] = rest.pop("success", None)
        fields["message"] = rest.pop("message", None)
        fields["body"] = rest.pop("body", None)
    else:
        fields["event"] = rest.pop("event", None)
        fields["body"] = rest.pop("body", None)
    return DapMessage(extra=rest, **fields)


def encode(msg: DapMessage) -> bytes:
    """Serialize one message, header included."""
    _validate(msg)
    try:
        text = json.dumps(to_json_obj(msg), ensure_ascii=False, separators=(",", ":"))
    except (TypeError, ValueError) as exc:
        raise EncodeError(f"unserializable message body: {exc}") from exc
    payload = text.encode("utf-8")
    return b"Content-Length: %d\r\n\r\n%b" % (len(payload), payload)


class StreamDecoder:
    """Incremental decoder: feed arbitrary chunks, get complete messages back.

    Chunk boundaries never matter. After a ProtocolError the stream is
    poisoned and every further feed raises.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self._body_len: int | None = None
        self._poisoned = False

    @property
    def pending(self) -> bool:
        """True when a partial message is still sitting in the buffer."""
        return bool(self._buf) or self._body_len is not None

    def feed(self, data: bytes) -> list[DapMessage]:
        if self._poisoned:
            raise ProtocolError("decoder already failed; restart the stream")
        self._buf.extend(data)
        out: list[DapMessage] = []
        try:
            while True:
                msg = self._next_message()
                if msg is None:
                    return out
                out.append(msg)
        except ProtocolError:
            self._poisoned = True
            raise

    def _next_message(self) -> DapMessage | None:
        if self._body_len is None:
            end = self._buf.find(_HEADER_END)
            if end < 0:
                if len(self._buf) > _MAX_HEADER_BYTES:
                    raise ProtocolError("header block exceeds 64 KiB without terminator")
                return None
            self._body_len = self._parse_header(bytes(self._buf[:end]))
            del self._buf[: end + len(_HEADER_END)]
        if len(self._buf) < self._body_len:
            return None
        raw = bytes(self._buf[: self._body_len])
        del self._buf[: self._body_len]
        self._body_len = None
        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"message body is not valid JSON ({exc}): {raw[:80]!r}") from exc
        return from_json_obj(obj)

    @staticmethod
    def _parse_header(block: bytes) -> int:
        length: int | None = None
        for line in block.split(b"\r\n"):
            name, sep, value = line.partition(b":")
            if not sep:
                raise ProtocolError(f"malformed header line: {line!r}")
            if name.strip().lower() == b"content-length":
                text = value.strip()
                if not text.isdigit():
                    raise ProtocolError(f"bad Content-Length value: {value!r}")
                length = int(text)
        if length is None:
            raise ProtocolError(f"missing Content-Length header in: {block!r}")
        return length


def decode(data: bytes) -> list[DapMessage]:
    """Decode a complete byte stream; raises if a partial message is left over."""
    dec = StreamDecoder()
    messages = dec.feed(data)
    if dec.pending:
        raise ProtocolError("truncated stream: partial message left in buffer")
    return messages


def iter_messages(chunks: Iterator[bytes]) -> Iterator[DapMessage]:
    """Decode from an iterable of chunks (convenience for tests and tools)."""
    dec = StreamDecoder()
    for chunk in chunks:
        yield from dec.feed(chunk)
