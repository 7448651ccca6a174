"""Find probe annotations in source text.

An annotation is a whole-line comment of the form ``<marker>@function(arg, ...)``.
Arguments are captured verbatim — they are source-language expressions that get
spliced into the trigger call unchanged, never evaluated here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import AnnotationError

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OPENERS = {"(": ")", "[": "]", "{": "}"}
_CLOSERS = {")", "]", "}"}


@dataclass(frozen=True)
class ProbeRequest:
    """What to run: a function name plus verbatim argument texts."""

    source: str
    language: str
    function: str
    args: tuple[str, ...]
    annotation_span: tuple[int, int, int]  # (line, start column, end column), 1-based


def split_arguments(text: str) -> list[str]:
    """Split a comma-separated argument list, respecting brackets and quotes.

    ``g(1,2), 'a,b'`` → ``["g(1,2)", "'a,b'"]``. Raises AnnotationError on
    unbalanced brackets or an unterminated string.
    """
    parts: list[str] = []
    stack: list[str] = []
    quote: str | None = None
    escaped = False
    current: list[str] = []
    for ch in text:
        if quote is not None:
            current.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            continue
        if ch in ("'", '"'):
            quote = ch
            current.append(ch)
        elif ch in _OPENERS:
            stack.append(_OPENERS[ch])
            current.append(ch)
        elif ch in _CLOSERS:
            if not stack or stack[-1] != ch:
                raise AnnotationError(f"unbalanced {ch!r} in argument list: {text!r}")
            stack.pop()
            current.append(ch)
        elif ch == "," and not stack:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if quote is not None:
        raise AnnotationError(f"unterminated string in argument list: {text!r}")
    if stack:
        raise AnnotationError(f"unbalanced brackets in argument list: {text!r}")
    parts.append("".join(current))
    trimmed = [p.strip() for p in parts]
    if trimmed == [""]:
        return []
    if any(p == "" for p in trimmed):
        raise AnnotationError(f"empty argument in list: {text!r}")
    return trimmed


def render_annotation(comment_marker: str, function: str, args: list[str] | tuple[str, ...]) -> str:
    """Inverse of parse_annotation for a single line (used by tests and tools)."""
    return f"{comment_marker}@{function}({', '.join(args)})"


def _find_call_end(text: str, line_no: int) -> int:
    """Index just past the ``)`` matching the ``(`` at text[0]."""
    depth = 0
    quote: str | None = None
    escaped = False
    for i, ch in enumerate(text):
        if quote is not None:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            continue
        if ch in ("'", '"'):
            quote = ch
        elif ch in _OPENERS:
            depth += 1
        elif ch in _CLOSERS:
            depth -= 1
            if depth == 0:
                return i + 1
    kind = "string" if quote is not None else "parentheses"
    raise AnnotationError(f"line {line_no}: annotation has unbalanced {kind}")


def parse_annotation(source: str, comment_marker: str, language: str = "") -> ProbeRequest | None:
    """Return the first probe annotation in ``source``, or None when there is none.

    Only whole-line comments count; an annotation is committed to once the
    content reads ``@identifier(`` — anything malformed after that raises
    AnnotationError with the line number. ``@word`` without a call (doc tags
    like ``@ts-ignore``) is skipped, and later annotations after the first
    valid one are ignored.
    """
    for line_no, line in enumerate(source.splitlines(), start=1):
        stripped = line.lstrip()
        if not stripped.startswith(comment_marker):
            continue
        content = stripped[len(comment_marker):].lstrip()
        if not content.startswith("@"):
            continue
        after = content[1:]
        ident = _IDENT.match(after)
        if ident is None:
            continue
        rest = after[ident.end():].lstrip()
        if not rest.startswith("("):
            continue
        call_len = _find_call_end(rest, line_no)
        if rest[call_len:].strip():
            raise AnnotationError(
                f"line {line_no}: trailing characters after annotation: {rest[call_len:].strip()!r}"
            )
        try:
            args = split_arguments(rest[1:call_len - 1])
        except AnnotationError as exc:
            raise AnnotationError(f"line {line_no}: {exc}") from exc
        marker_col = len(line) - len(stripped) + 1
        end_col = marker_col + len(stripped.rstrip())
        return ProbeRequest(
            source=source,
            language=language,
            function=ident.group(0),
            args=tuple(args),
            annotation_span=(line_no, marker_col, end_col),
        )
    return None
