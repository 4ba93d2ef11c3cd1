"""Selector mini-language for addressing rows and columns by key.

Five selector forms exist: everything, an explicit key list, a key prefix, an
inclusive key range, and a 1-based inclusive positional window. String
selectors use the trailing-delimiter convention: the final character of the
raw string is the delimiter, and the text splits on it into tokens. Examples
(with a space delimiter):

    ':'              -> All
    'alice '         -> KeyList(['alice'])
    'alice bob '     -> KeyList(['alice', 'bob'])
    'al* '           -> Prefix('al')
    'alice : bob '   -> KeyRange('alice', 'bob')

Positional windows are supplied as non-string literals: an int `n` or a pair
`(lo, hi)`, both 1-based and inclusive.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import BadPositional, EmptySelector, MalformedRange
from .keys import Key, normalize_key, sort_token


class _All:
    """Matches every key. Use the module-level ALL singleton."""

    __slots__ = ()

    def __repr__(self):
        return "All"

    def __eq__(self, other):
        return isinstance(other, _All)

    def __hash__(self):
        return hash(_All)


ALL = _All()


@dataclass(frozen=True)
class KeyList:
    keys: tuple[Key, ...]

    def __init__(self, keys):
        norm = tuple(normalize_key(k) for k in keys)
        if not norm:
            raise EmptySelector("key list selector needs at least one key")
        object.__setattr__(self, "keys", norm)


@dataclass(frozen=True)
class Prefix:
    stem: str

    def __post_init__(self):
        if not isinstance(self.stem, str) or not self.stem:
            raise EmptySelector("prefix selector needs a non-empty text stem")


@dataclass(frozen=True)
class KeyRange:
    lo: Key
    hi: Key

    def __init__(self, lo, hi):
        lo = normalize_key(lo)
        hi = normalize_key(hi)
        if sort_token(lo) > sort_token(hi):
            raise MalformedRange(f"range lower bound {lo!r} exceeds upper bound {hi!r}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class Positional:
    lo: int
    hi: int

    def __post_init__(self):
        if not (isinstance(self.lo, int) and isinstance(self.hi, int)):
            raise BadPositional("positional bounds must be integers")
        if self.lo < 1 or self.hi < self.lo:
            raise BadPositional(f"bad positional window {self.lo}:{self.hi} (1-based, inclusive)")


Selector = Union[_All, KeyList, Prefix, KeyRange, Positional]


def parse_selector(source) -> Selector:
    """Build a Selector from a raw string or a positional literal.

    Strings follow the trailing-delimiter grammar described in the module
    docstring; ':' alone selects everything. A single token ending in '*' is a
    prefix, three tokens 'a : b' are an inclusive range, anything else is an
    exact key list. Ints and (lo, hi) int pairs are positional windows.
    Selector instances pass through unchanged.
    """
    if isinstance(source, _All) or isinstance(
        source, (KeyList, Prefix, KeyRange, Positional)
    ):
        return source
    if isinstance(source, str):
        return _parse_text(source)
    if isinstance(source, bool):
        raise BadPositional("positional literal must be an int or (lo, hi) pair")
    if isinstance(source, int):
        return Positional(source, source)
    if isinstance(source, tuple) and len(source) == 2:
        lo, hi = source
        if isinstance(lo, int) and isinstance(hi, int) and not isinstance(lo, bool) and not isinstance(hi, bool):
            return Positional(lo, hi)
        raise BadPositional(f"positional pair must hold two ints, got {source!r}")
    raise EmptySelector(f"cannot build a selector from {source!r}")


def _parse_text(raw: str) -> Selector:
    if raw == ":":
        return ALL
    if not raw:
        raise EmptySelector("empty selector string")
    delim = raw[-1]
    tokens = [t for t in raw.split(delim) if t != ""]
    if not tokens:
        raise EmptySelector(f"selector {raw!r} has no tokens")
    if ":" in tokens:
        if len(tokens) == 3 and tokens[1] == ":" and tokens[0] != ":" and tokens[2] != ":":
            return KeyRange(tokens[0], tokens[2])
        raise MalformedRange(f"selector {raw!r}: ':' token must sit between two endpoints")
    if len(tokens) == 1 and tokens[0].endswith("*"):
        return Prefix(tokens[0][:-1])
    return KeyList(tokens)


def match_keys(selector, keys: Sequence[Key]) -> list[int]:
    """Indices (0-based, ascending, duplicate-free) of keys the selector hits.

    `keys` must already be sorted by the key total order, which is how every
    associative array stores its key lists.
    """
    sel = parse_selector(selector)
    n = len(keys)
    if isinstance(sel, _All):
        return list(range(n))
    if isinstance(sel, Positional):
        if sel.lo > n:
            return []
        return list(range(sel.lo - 1, min(sel.hi, n)))
    tokens = [sort_token(k) for k in keys]
    if isinstance(sel, KeyList):
        out = set()
        for k in sel.keys:
            i = bisect.bisect_left(tokens, sort_token(k))
            if i < n and keys[i] == k:
                out.add(i)
        return sorted(out)
    if isinstance(sel, Prefix):
        start = bisect.bisect_left(tokens, (1, sel.stem))
        out = []
        for i in range(start, n):
            k = keys[i]
            if not isinstance(k, str) or not k.startswith(sel.stem):
                break
            out.append(i)
        return out
    if isinstance(sel, KeyRange):
        lo_i = bisect.bisect_left(tokens, sort_token(sel.lo))
        hi_i = bisect.bisect_right(tokens, sort_token(sel.hi))
        return list(range(lo_i, hi_i))
    raise TypeError(f"not a selector: {selector!r}")


def key_predicate(selector):
    """Per-key membership test for streaming filters.

    Works for every selector form except Positional, which needs the full key
    list; resolve positional selectors to a KeyList first.
    """
    sel = parse_selector(selector)
    if isinstance(sel, _All):
        return lambda k: True
    if isinstance(sel, KeyList):
        wanted = frozenset(sel.keys)
        return lambda k: k in wanted
    if isinstance(sel, Prefix):
        stem = sel.stem
        return lambda k: isinstance(k, str) and k.startswith(stem)
    if isinstance(sel, KeyRange):
        lo = sort_token(sel.lo)
        hi = sort_token(sel.hi)
        return lambda k: lo <= sort_token(k) <= hi
    raise BadPositional("positional selectors need the full key list; resolve them first")
