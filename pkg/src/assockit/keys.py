"""Key and value primitives: normalization, total order, rendering, byte codec.

Keys and values are either text (str) or 64-bit floats. The total order puts
every number before every text; numbers compare numerically and texts by the
byte order of their UTF-8 encoding (identical to code-point order). The byte
codec preserves that order under plain bytewise comparison, which is what the
run files of the embedded store rely on for range scans.
"""

from __future__ import annotations

import math
import struct

Key = float | str
Value = float | str

NUMBER_TAG = 0x01
TEXT_TAG = 0x02

_SIGN = 1 << 63
_MASK64 = (1 << 64) - 1
_F64 = struct.Struct(">d")
_U32 = struct.Struct(">I")


def normalize_key(raw) -> Key:
    """Coerce to a canonical key.

    Text stays as-is; ints and floats become floats. NaN is rejected because
    it has no place in a total order, and -0.0 collapses to 0.0 so that equal
    keys always share one encoding.
    """
    if isinstance(raw, str):
        return raw
    if isinstance(raw, bool):
        raise TypeError("bool is not a valid key")
    if isinstance(raw, (int, float)):
        f = float(raw)
        if math.isnan(f):
            raise ValueError("NaN is not a valid key")
        return 0.0 if f == 0.0 else f
    raise TypeError(f"key must be text or a real number, got {type(raw).__name__}")


def normalize_value(raw) -> Value:
    """Coerce to a canonical value (text or float). -0.0 collapses to 0.0."""
    if isinstance(raw, str):
        return raw
    if isinstance(raw, bool):
        raise TypeError("bool is not a valid value")
    if isinstance(raw, (int, float)):
        f = float(raw)
        if f == 0.0:
            return 0.0
        return f
    raise TypeError(f"value must be text or a real number, got {type(raw).__name__}")


def is_text(x) -> bool:
    return isinstance(x, str)


def sort_token(k: Key):
    """Comparable token realizing the total order (numbers before texts)."""
    if isinstance(k, str):
        return (1, k)
    return (0, k)


def render_atom(x: Key | Value) -> str:
    """Text rendering of a key or value.

    Text passes through verbatim. Numbers render in shortest round-trip
    decimal form, with a trailing '.0' stripped from integral floats.
    """
    if isinstance(x, str):
        return x
    r = repr(float(x))
    if r.endswith(".0"):
        return r[:-2]
    return r


def parse_number(text: str) -> float | None:
    """Parse text as a float, or None if it does not look like a number."""
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        return None


def encode_key(k: Key) -> bytes:
    """Order-preserving encoding: tag byte, then payload.

    Numbers: sign-flipped big-endian IEEE double (bytewise order == numeric
    order). Texts: raw UTF-8 with 0x00 escaped as 0x00 0xFF and a 0x00
    terminator, so bytewise order == text order and the field self-delimits.
    """
    if isinstance(k, str):
        data = k.encode("utf-8").replace(b"\x00", b"\x00\xff")
        return b"\x02" + data + b"\x00"
    (bits,) = struct.unpack(">Q", _F64.pack(k))
    if bits & _SIGN:
        bits ^= _MASK64
    else:
        bits |= _SIGN
    return b"\x01" + bits.to_bytes(8, "big")


def decode_key(buf: bytes, pos: int) -> tuple[Key, int]:
    """Decode one key starting at pos; returns (key, next position)."""
    tag = buf[pos]
    if tag == NUMBER_TAG:
        bits = int.from_bytes(buf[pos + 1 : pos + 9], "big")
        if bits & _SIGN:
            bits ^= _SIGN
        else:
            bits ^= _MASK64
        (f,) = _F64.unpack(bits.to_bytes(8, "big"))
        return f, pos + 9
    if tag != TEXT_TAG:
        raise ValueError(f"bad key tag {tag:#x} at offset {pos}")
    i = pos + 1
    while True:
        j = buf.index(b"\x00", i)
        if j + 1 < len(buf) and buf[j + 1] == 0xFF:
            i = j + 2
            continue
        raw = buf[pos + 1 : j]
        return raw.replace(b"\x00\xff", b"\x00").decode("utf-8"), j + 1


def encode_value(v: Value) -> bytes:
    if isinstance(v, str):
        data = v.encode("utf-8")
        return b"\x02" + _U32.pack(len(data)) + data
    return b"\x01" + _F64.pack(v)


def decode_value(buf: bytes, pos: int) -> tuple[Value, int]:
    tag = buf[pos]
    if tag == NUMBER_TAG:
        (f,) = _F64.unpack(buf[pos + 1 : pos + 9])
        return f, pos + 9
    if tag != TEXT_TAG:
        raise ValueError(f"bad value tag {tag:#x} at offset {pos}")
    (n,) = _U32.unpack(buf[pos + 1 : pos + 5])
    end = pos + 5 + n
    return buf[pos + 5 : end].decode("utf-8"), end
