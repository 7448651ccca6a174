"""Annotation discovery and argument splitting."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liverec.errors import AnnotationError
from liverec.probespec import (
    ProbeRequest,
    parse_annotation,
    render_annotation,
    split_arguments,
)


def test_basic_annotation():
    src = "// @foo(3)\n// code\n"
    probe = parse_annotation(src, "//", "mock")
    assert isinstance(probe, ProbeRequest)
    assert probe.function == "foo"
    assert probe.args == ("3",)
    assert probe.language == "mock"
    assert probe.annotation_span == (1, 1, 11)


def test_no_annotation_returns_none():
    assert parse_annotation("// just a comment\nx = 1\n", "//") is None


def test_empty_argument_list():
    probe = parse_annotation("# @run()\n", "#")
    assert probe.args == ()


def test_multiple_arguments_kept_verbatim():
    src = "# @binary_search(['a', 'b'], 'g')\n"
    probe = parse_annotation(src, "#")
    assert probe.function == "binary_search"
    assert probe.args == ("['a', 'b']", "'g'")


def test_indented_annotation_span():
    src = "x = 1\n    # @foo(1)\n"
    probe = parse_annotation(src, "#")
    line, start, end = probe.annotation_span
    assert line == 2
    assert start == 5
    assert src.splitlines()[1][start - 1 : end - 1] == "# @foo(1)"


def test_marker_must_start_the_line():
    # trailing comments do not count as annotation carriers
    assert parse_annotation("x = 1  # @foo(1)\n", "#") is None


def test_wrong_marker_ignored():
    assert parse_annotation("# @foo(1)\n", "//") is None


def test_doc_tags_without_call_are_skipped():
    src = "// @ts-ignore\n// @deprecated since v2\n// @foo(1)\n"
    probe = parse_annotation(src, "//")
    assert probe.function == "foo"
    assert probe.annotation_span[0] == 3


def test_first_annotation_wins():
    src = "// @first(1)\n// @second(2)\n"
    assert parse_annotation(src, "//").function == "first"


def test_unbalanced_parens_report_line():
    with pytest.raises(AnnotationError, match="line 2"):
        parse_annotation("// fine\n// @foo(1, (2)\n", "//")


def test_unterminated_string_rejected():
    with pytest.raises(AnnotationError, match="line 1"):
        parse_annotation("// @foo('abc)\n", "//")


def test_trailing_garbage_rejected():
    with pytest.raises(AnnotationError, match="trailing"):
        parse_annotation("// @foo(1) extra\n", "//")


def test_empty_argument_slot_rejected():
    with pytest.raises(AnnotationError, match="line 1"):
        parse_annotation("// @foo(1,,2)\n", "//")


def test_quoted_comma_and_paren_stay_in_one_argument():
    assert split_arguments("g(1,2), 'a,b)'") == ["g(1,2)", "'a,b)'"]


def test_escaped_quote_inside_string():
    assert split_arguments(r"'it\'s', 2") == [r"'it\'s'", "2"]


def test_nested_brackets():
    assert split_arguments("[1, [2, 3]], {4: (5, 6)}") == ["[1, [2, 3]]", "{4: (5, 6)}"]


def test_mismatched_closer_rejected():
    with pytest.raises(AnnotationError):
        split_arguments("[1)")


def test_render_parse_inverse():
    line = render_annotation("# ", "foo", ["1", "'x'"])
    assert line == "# @foo(1, 'x')"
    probe = parse_annotation(line + "\n", "#")
    assert probe.function == "foo"
    assert probe.args == ("1", "'x'")


# -- an independent splitter as oracle ----------------------------------------


def _reference_split(text: str) -> list[str]:
    """Character-by-character reference implementation, written separately."""
    args: list[str] = []
    buf = ""
    i = 0
    depth = 0
    while i < len(text):
        ch = text[i]
        if ch in "'\"":
            end = i + 1
            while True:
                if end >= len(text):
                    raise ValueError("open string")
                if text[end] == "\\":
                    end += 2
                    continue
                if text[end] == ch:
                    break
                end += 1
            buf += text[i : end + 1]
            i = end + 1
            continue
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
            if depth < 0:
                raise ValueError("unbalanced")
        if ch == "," and depth == 0:
            args.append(buf.strip())
            buf = ""
        else:
            buf += ch
        i += 1
    if depth != 0:
        raise ValueError("unbalanced")
    args.append(buf.strip())
    return [] if args == [""] else args


_arg_atoms = st.sampled_from(
    ["1", "-42", "3.5", "'a,b'", '"x(y"', "[1, 2]", "(0)", "{1: 2}", "name", "f(g(1), 2)", "'it\\'s'"]
)


@settings(max_examples=120, deadline=None)
@given(st.lists(_arg_atoms, min_size=0, max_size=5))
def test_split_matches_reference(atoms):
    text = ", ".join(atoms)
    assert split_arguments(text) == _reference_split(text)


@settings(max_examples=80, deadline=None)
@given(st.lists(_arg_atoms, min_size=0, max_size=4), st.sampled_from(["//", "#", "--"]))
def test_annotation_roundtrip(atoms, marker):
    src = "code line\n" + render_annotation(marker, "probe_fn", atoms) + "\n"
    probe = parse_annotation(src, marker)
    assert probe is not None
    assert probe.function == "probe_fn"
    assert list(probe.args) == atoms
