import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assockit.keys import (
    decode_key,
    decode_value,
    encode_key,
    encode_value,
    normalize_key,
    normalize_value,
    parse_number,
    render_atom,
    sort_token,
)

texts = st.text(max_size=12)
numbers = st.floats(allow_nan=False, allow_infinity=False, width=64)
keys = st.one_of(texts, numbers)


def test_normalize_key_rejects_nan_and_bool():
    with pytest.raises(ValueError):
        normalize_key(float("nan"))
    with pytest.raises(TypeError):
        normalize_key(True)
    with pytest.raises(TypeError):
        normalize_key(None)


def test_normalize_collapses_negative_zero():
    assert str(normalize_key(-0.0)) == "0.0"
    assert encode_key(normalize_key(-0.0)) == encode_key(0.0)
    assert str(normalize_value(-0.0)) == "0.0"


def test_int_keys_become_floats():
    assert normalize_key(3) == 3.0
    assert isinstance(normalize_key(3), float)


def test_numbers_sort_before_texts():
    ks = sorted(["b", 10.0, "a", -2.5, "0"], key=sort_token)
    assert ks == [-2.5, 10.0, "0", "a", "b"]


def test_render_atom():
    assert render_atom("x") == "x"
    assert render_atom(47.0) == "47"
    assert render_atom(3.5) == "3.5"
    assert render_atom(-2.0) == "-2"
    assert parse_number(render_atom(1e300)) == 1e300


@given(numbers)
def test_number_render_round_trips(x):
    assert parse_number(render_atom(x)) == x


@given(keys, keys)
@settings(max_examples=300)
def test_encoding_preserves_order(a, b):
    a = normalize_key(a)
    b = normalize_key(b)
    assert (encode_key(a) < encode_key(b)) == (sort_token(a) < sort_token(b))
    assert (encode_key(a) == encode_key(b)) == (a == b)


@given(keys)
def test_key_codec_round_trips(k):
    k = normalize_key(k)
    buf = encode_key(k) + b"tail"
    out, pos = decode_key(buf, 0)
    assert out == k
    assert buf[pos:] == b"tail"


def test_text_with_embedded_nul_round_trips():
    k = "a\x00b\x00"
    buf = encode_key(k)
    out, pos = decode_key(buf, 0)
    assert out == k and pos == len(buf)
    # order against neighbors stays correct
    assert encode_key("a") < encode_key("a\x00") < encode_key("a\x01") < encode_key("ab")


@given(st.one_of(texts, numbers))
def test_value_codec_round_trips(v):
    v = normalize_value(v)
    buf = encode_value(v) + b"x"
    out, pos = decode_value(buf, 0)
    assert out == v
    assert buf[pos:] == b"x"
