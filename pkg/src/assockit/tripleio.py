"""Shared tab-separated triple text format.

One triple per line: row, column, value, separated by tabs, UTF-8. Tab,
newline, and backslash inside a field are escaped as \\t, \\n, \\\\. Numeric
values render in shortest round-trip decimal form. Keys travel as text;
readers that know a column is numeric can opt into parsing it.
"""

from __future__ import annotations

import io
from typing import Iterable

from .errors import IoFailure
from .keys import Key, Value, normalize_value, parse_number, render_atom

Triple = tuple[Key, Key, Value]


def escape_field(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def unescape_field(text: str) -> str:
    if "\\" not in text:
        return text
    out = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\\" and i + 1 < n:
            nxt = text[i + 1]
            if nxt == "t":
                out.append("\t")
                i += 2
                continue
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def format_triple(row, col, val) -> str:
    return "\t".join(
        escape_field(render_atom(x)) for x in (row, col, normalize_value(val))
    )


def write_triples(path_or_fp, triples: Iterable) -> int:
    """Write triples to a path or text file object; returns the line count."""
    if hasattr(path_or_fp, "write"):
        return _write(path_or_fp, triples)
    try:
        with open(path_or_fp, "w", encoding="utf-8", newline="\n") as fp:
            return _write(fp, triples)
    except OSError as e:
        raise IoFailure(f"cannot write {path_or_fp}: {e}") from e


def _write(fp, triples) -> int:
    n = 0
    for r, c, v in triples:
        fp.write(format_triple(r, c, v))
        fp.write("\n")
        n += 1
    return n


def parse_line(line: str) -> tuple[str, str, str]:
    parts = line.split("\t")
    if len(parts) != 3:
        raise IoFailure(f"expected 3 tab-separated fields, got {len(parts)}")
    return tuple(unescape_field(p) for p in parts)


def read_triples(path_or_fp, value_mode: str = "auto") -> list[Triple]:
    """Read triples from a path or text file object.

    Values in one array share a variant, so 'auto' parses values as numbers
    only when every value on the file parses; otherwise all stay text.
    'number' requires numeric values, 'text' keeps them verbatim.
    """
    if value_mode not in ("auto", "number", "text"):
        raise ValueError(f"bad value_mode {value_mode!r}")
    if hasattr(path_or_fp, "read"):
        return _read(path_or_fp, value_mode)
    try:
        with open(path_or_fp, "r", encoding="utf-8", newline="\n") as fp:
            return _read(fp, value_mode)
    except OSError as e:
        raise IoFailure(f"cannot read {path_or_fp}: {e}") from e


def _read(fp: io.TextIOBase, value_mode: str) -> list[Triple]:
    raw: list[tuple[str, str, str]] = []
    for lineno, line in enumerate(fp, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        try:
            raw.append(parse_line(line))
        except IoFailure as e:
            raise IoFailure(f"line {lineno}: {e}") from e
    if value_mode == "text":
        return [(r, c, v) for r, c, v in raw]
    nums = [parse_number(v) for _, _, v in raw]
    if all(n is not None for n in nums):
        return [(r, c, n) for (r, c, _), n in zip(raw, nums)]
    if value_mode == "number":
        bad = next(v for (_, _, v), n in zip(raw, nums) if n is None)
        raise IoFailure(f"non-numeric value {bad!r}")
    return [(r, c, v) for r, c, v in raw]
