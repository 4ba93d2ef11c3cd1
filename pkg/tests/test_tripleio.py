import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assockit.assoc import Assoc
from assockit import tripleio
from assockit.errors import IoFailure


def test_escape_roundtrip_basics():
    for s in ["plain", "with\ttab", "with\nnewline", "back\\slash", "", "mix\t\n\\"]:
        assert tripleio.unescape_field(tripleio.escape_field(s)) == s


@given(st.text())
@settings(max_examples=200, deadline=None)
def test_escape_roundtrip_property(s):
    esc = tripleio.escape_field(s)
    assert "\t" not in esc and "\n" not in esc
    assert tripleio.unescape_field(esc) == s


def test_write_then_read_file(tmp_path):
    a = Assoc([("a b", "x\ty", 1.5), (2.0, "z\nq", -3.0), ("k", 7.0, 42.0)])
    path = tmp_path / "t.tsv"
    n = tripleio.write_triples(path, a.triples())
    assert n == 3
    back = Assoc(tripleio.read_triples(path))
    # keys travel as text, so numeric keys come back as their rendered form
    assert back.get("2", "z\nq") == -3.0
    assert back.get("a b", "x\ty") == 1.5
    assert back.get("k", "7") == 42.0


def test_read_value_modes(tmp_path):
    p = tmp_path / "v.tsv"
    p.write_text("a\tx\t1.5\nb\ty\tword\n")
    trips = tripleio.read_triples(p)  # auto: mixed input stays text
    assert trips == [("a", "x", "1.5"), ("b", "y", "word")]
    p2 = tmp_path / "n.tsv"
    p2.write_text("a\tx\t1.5\nb\ty\t-2\n")
    assert tripleio.read_triples(p2) == [("a", "x", 1.5), ("b", "y", -2.0)]
    assert tripleio.read_triples(p2, value_mode="text") == [
        ("a", "x", "1.5"),
        ("b", "y", "-2"),
    ]
    with pytest.raises(IoFailure):
        tripleio.read_triples(p, value_mode="number")


def test_blank_lines_skipped():
    fp = io.StringIO("a\tx\t1\n\n\nb\ty\t2\n")
    assert tripleio.read_triples(fp) == [("a", "x", 1.0), ("b", "y", 2.0)]


def test_malformed_line_raises():
    with pytest.raises(IoFailure):
        tripleio.read_triples(io.StringIO("only two\tfields\n"))


def test_missing_file_raises(tmp_path):
    with pytest.raises(IoFailure):
        tripleio.read_triples(tmp_path / "nope.tsv")


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_roundtrip_random_text_values(seed):
    import random

    rng = random.Random(seed)
    trips = [
        (f"r{i}", f"c{rng.randint(0, 5)}", rng.choice(["q", "w\t", "e\n", "\\"]))
        for i in range(rng.randint(1, 20))
    ]
    a = Assoc(trips)
    buf = io.StringIO()
    tripleio.write_triples(buf, a.triples())
    buf.seek(0)
    assert Assoc(tripleio.read_triples(buf)) == a
