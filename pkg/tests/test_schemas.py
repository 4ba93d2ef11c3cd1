import io
import random

import pytest

from assockit.assoc import Assoc
from assockit.errors import ReservedKeyCollision, SchemaMismatch, SelfLoop
from assockit.generator import GenConfig, generate
from assockit.schemas import (
    DEG_COL,
    EDGE_PREFIX,
    EdgeList,
    Schema,
    build_adjacency,
    build_incidence,
    build_single_table,
    canonical_adjacency,
    convert,
    edge_id,
    to_edge_list,
)

from conftest import random_graph

TRIANGLE = [("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)]


def tdict(a: Assoc):
    return {(r, c): v for r, c, v in a.triples()}


# ---- EdgeList normalization ----------------------------------------------------


def test_normalized_strips_loops_orients_and_merges():
    e = EdgeList([("b", "a", 2.0), ("a", "b", 3.0), ("x", "x", 9.0), ("a", "c", 1.0)])
    n = e.normalized()
    assert n.edges == (("a", "b", 5.0), ("a", "c", 1.0))


def test_normalized_strict_raises_on_loop():
    with pytest.raises(SelfLoop):
        EdgeList([("x", "x", 1.0)]).normalized(strict=True)


def test_normalized_drops_zero_merge():
    n = EdgeList([("a", "b", 2.0), ("b", "a", -2.0)]).normalized()
    assert n.edges == ()


def test_normalized_orders_numbers_before_texts():
    n = EdgeList([("z", 3.0, 1.0)]).normalized()
    assert n.edges == ((3.0, "z", 1.0),)


def test_edgelist_roundtrip_file():
    e = EdgeList(TRIANGLE).normalized()
    buf = io.StringIO()
    e.write(buf)
    buf.seek(0)
    assert EdgeList.read(buf).edges == e.edges


def test_directed_input_rejected_by_builders():
    with pytest.raises(SchemaMismatch):
        build_adjacency(EdgeList(TRIANGLE, directed=True))


# ---- builders -------------------------------------------------------------------


def test_adjacency_triangle():
    g = build_adjacency(EdgeList(TRIANGLE))
    assert g.schema is Schema.ADJACENCY
    assert g.main.nnz == 6
    assert g.main == g.main.T
    assert tdict(g.degree) == {("a", DEG_COL): 2.0, ("b", DEG_COL): 2.0, ("c", DEG_COL): 2.0}
    assert g.edge_count() == 3


def test_adjacency_empty():
    g = build_adjacency(EdgeList())
    assert g.main.nnz == 0 and g.degree.nnz == 0


def test_incidence_single_edge():
    g = build_incidence(EdgeList([("a", "b", 2.5)]))
    assert g.main.row_keys == ("0000001",)
    assert tdict(g.main) == {("0000001", "a"): 2.5, ("0000001", "b"): 2.5}
    assert g.transpose_table == g.main.T
    assert tdict(g.degree) == {("a", DEG_COL): 1.0, ("b", DEG_COL): 1.0}


def test_edge_id_width_guard():
    assert edge_id(12) == "0000012"
    with pytest.raises(ValueError):
        edge_id(10**7)


def test_incidence_degree_matches_adjacency_degree():
    rng = random.Random(3)
    e = EdgeList(random_graph(rng)).normalized()
    assert build_incidence(e).degree == build_adjacency(e).degree


def test_incidence_ete_identity_triangle():
    g = build_incidence(EdgeList(TRIANGLE))
    ete = g.main.T.logical() @ g.main.logical()
    adj = build_adjacency(EdgeList(TRIANGLE))
    diag = Assoc([(v, v, d) for (v, _), d in tdict(adj.degree).items()])
    assert ete == adj.main.logical() + diag


@pytest.mark.parametrize("seed", range(3))
def test_incidence_ete_identity_generated(seed):
    e = generate(GenConfig(8, 8, seed)).normalized()
    g = build_incidence(e)
    adj = build_adjacency(e)
    ete = g.transpose_table.logical() @ g.main.logical()
    diag = Assoc([(v, v, d) for (v, _), d in tdict(adj.degree).items()])
    assert ete == adj.main.logical() + diag


def test_single_table_one_edge():
    g = build_single_table(EdgeList([("a", "b", 3.0)]))
    assert tdict(g.main) == {
        ("a", DEG_COL): 1.0,
        ("a", EDGE_PREFIX + "b"): 3.0,
        ("b", DEG_COL): 1.0,
        ("b", EDGE_PREFIX + "a"): 3.0,
    }
    assert g.degree == g.main.select(":", "deg ")


def test_single_table_reserved_keys():
    with pytest.raises(ReservedKeyCollision):
        build_single_table(EdgeList([("deg", "b", 1.0)]))
    with pytest.raises(ReservedKeyCollision):
        build_single_table(EdgeList([("edge|x", "b", 1.0)]))
    with pytest.raises(ReservedKeyCollision):
        # number 2 and text '2' render identically inside column names
        build_single_table(EdgeList([(2.0, "b", 1.0), ("2", "c", 1.0)]))


def test_single_table_renders_numeric_vertices():
    g = build_single_table(EdgeList([(2.0, "b", 1.0)]))
    assert ("2", EDGE_PREFIX + "b") in tdict(g.main)


def test_single_table_strip_reproduces_adjacency():
    rng = random.Random(11)
    e = EdgeList(random_graph(rng)).normalized()
    g = build_single_table(e)
    stripped = Assoc(
        [(r, c[len(EDGE_PREFIX):], w) for r, c, w in g.main.select(":", "edge|* ").triples()]
    )
    assert stripped == build_adjacency(e).main


# ---- handshake -------------------------------------------------------------------


@pytest.mark.parametrize("builder", [build_adjacency, build_incidence, build_single_table])
def test_handshake_lemma(builder):
    e = generate(GenConfig(8, 8, 1)).normalized()
    g = builder(e)
    total = sum(w for _, _, w in g.degree.triples())
    assert total == 2.0 * len(e.edges)


# ---- conversions ------------------------------------------------------------------


def test_adjacency_incidence_roundtrip():
    rng = random.Random(5)
    e = EdgeList(random_graph(rng)).normalized()
    g = build_adjacency(e)
    back = convert(convert(g, Schema.INCIDENCE), Schema.ADJACENCY)
    assert back.main == g.main
    assert back.degree == g.degree


def test_single_table_of_triangle_converts_to_adjacency():
    g = convert(build_single_table(EdgeList(TRIANGLE)), Schema.ADJACENCY)
    assert g.main == build_adjacency(EdgeList(TRIANGLE)).main


ALL_SCHEMAS = [Schema.ADJACENCY, Schema.INCIDENCE, Schema.SINGLE]


@pytest.mark.parametrize("seed", range(2))
def test_all_conversion_directions_agree(seed):
    e = generate(GenConfig(8, 4, seed)).normalized()
    bundles = {s: convert(build_adjacency(e), s) for s in ALL_SCHEMAS}
    want_main, want_deg = canonical_adjacency(bundles[Schema.ADJACENCY])
    for src in ALL_SCHEMAS:
        for dst in ALL_SCHEMAS:
            if src is dst:
                continue
            got_main, got_deg = canonical_adjacency(convert(bundles[src], dst))
            assert got_main == want_main, (src, dst)
            assert got_deg == want_deg, (src, dst)


def test_to_edge_list_orders_and_orients():
    g = build_adjacency(EdgeList([("b", "a", 1.5), ("c", "a", 2.0)]))
    assert to_edge_list(g).edges == (("a", "b", 1.5), ("a", "c", 2.0))


def test_to_edge_list_rejects_ragged_incidence():
    from assockit.schemas import GraphBundle

    base = build_incidence(EdgeList(TRIANGLE))
    broken = Assoc(list(base.main.triples()) + [("0000001", "zz", 1.0)])
    g = GraphBundle(Schema.INCIDENCE, broken, broken.T, base.degree)
    with pytest.raises(SchemaMismatch):
        to_edge_list(g)
