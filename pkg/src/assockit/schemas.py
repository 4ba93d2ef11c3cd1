"""Graph containers over associative arrays.

Three layouts of one undirected weighted graph:

- adjacency: square symmetric array over vertex keys, plus a degree table
  whose 'deg' column holds logical row sums
- incidence: one row per edge (zero-padded decimal id, input order) with
  entries at the two endpoint columns carrying the edge weight, plus the
  transpose table and the same degree table
- single-table: one row per vertex holding a 'deg' entry and one 'edge|w'
  column per neighbor w, weights on the edge entries

Conversions route through a normalized edge list: self-loops stripped,
undirected edges oriented low-high, parallel edges merged by weight sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .assoc import Assoc
from .errors import ReservedKeyCollision, SchemaMismatch, SelfLoop
from .keys import Key, normalize_key, normalize_value, render_atom, sort_token
from . import tripleio

DEG_COL = "deg"
EDGE_PREFIX = "edge|"
EDGE_ID_WIDTH = 7

Edge = tuple[Key, Key, float]


class Schema(Enum):
    ADJACENCY = "adjacency"
    INCIDENCE = "incidence"
    SINGLE = "single"


@dataclass(frozen=True)
class EdgeList:
    """Weighted edge collection; the graph's interchange form.

    Construction keeps the edges verbatim (duplicates and self-loops
    included); normalized() produces the canonical simple form the
    schema builders require.
    """

    edges: tuple[Edge, ...]
    directed: bool = False

    def __init__(self, edges: Iterable = (), directed: bool = False):
        clean = tuple(
            (normalize_key(u), normalize_key(v), float(normalize_value(w)))
            for u, v, w in edges
        )
        object.__setattr__(self, "edges", clean)
        object.__setattr__(self, "directed", bool(directed))

    def __len__(self) -> int:
        return len(self.edges)

    def normalized(self, strict: bool = False) -> "EdgeList":
        """Simple undirected form: no self-loops, u < v, parallels merged.

        strict=True raises SelfLoop instead of dropping loops silently.
        """
        merged: dict[tuple[Key, Key], float] = {}
        for u, v, w in self.edges:
            if u == v:
                if strict:
                    raise SelfLoop(f"self-loop at {u!r}")
                continue
            if not self.directed and sort_token(v) < sort_token(u):
                u, v = v, u
            key = (u, v)
            merged[key] = merged.get(key, 0.0) + w
        edges = sorted(
            ((u, v, w) for (u, v), w in merged.items() if w != 0.0),
            key=lambda e: (sort_token(e[0]), sort_token(e[1])),
        )
        return EdgeList(edges, directed=self.directed)

    def vertex_keys(self) -> tuple[Key, ...]:
        seen = {u for u, _, _ in self.edges} | {v for _, v, _ in self.edges}
        return tuple(sorted(seen, key=sort_token))

    def write(self, path_or_fp) -> int:
        return tripleio.write_triples(path_or_fp, self.edges)

    @classmethod
    def read(cls, path_or_fp, directed: bool = False) -> "EdgeList":
        trips = tripleio.read_triples(path_or_fp, value_mode="number")
        return cls(trips, directed=directed)


@dataclass(frozen=True)
class GraphBundle:
    """One graph in one schema: main array, optional transpose, degree table."""

    schema: Schema
    main: Assoc
    transpose_table: Optional[Assoc]
    degree: Assoc

    def edge_count(self) -> int:
        if self.schema is Schema.ADJACENCY:
            return self.main.nnz // 2
        if self.schema is Schema.INCIDENCE:
            return len(self.main.row_keys)
        return self.main.select(":", "edge|* ").nnz // 2


def _require_undirected(e: EdgeList) -> EdgeList:
    if e.directed:
        raise SchemaMismatch("graph schemas require an undirected edge list")
    return e.normalized()


def edge_id(index: int) -> str:
    """Row key for the index-th edge (1-based, zero-padded decimal)."""
    if index >= 10**EDGE_ID_WIDTH:
        raise ValueError(f"edge index {index} exceeds id width {EDGE_ID_WIDTH}")
    return f"{index:0{EDGE_ID_WIDTH}d}"


def build_adjacency(e: EdgeList) -> GraphBundle:
    e = _require_undirected(e)
    trips = []
    for u, v, w in e.edges:
        trips.append((u, v, w))
        trips.append((v, u, w))
    main = Assoc(trips)
    degree = main.logical().reduce_rows()
    return GraphBundle(Schema.ADJACENCY, main, None, degree)


def build_incidence(e: EdgeList) -> GraphBundle:
    e = _require_undirected(e)
    trips = []
    for i, (u, v, w) in enumerate(e.edges, 1):
        eid = edge_id(i)
        trips.append((eid, u, w))
        trips.append((eid, v, w))
    main = Assoc(trips)
    transpose = main.transpose()
    degree = transpose.logical().reduce_rows()
    return GraphBundle(Schema.INCIDENCE, main, transpose, degree)


def _rendered_vertices(e: EdgeList) -> dict[Key, str]:
    """Vertex key -> text form used in single-table column names.

    Column names are text, so every vertex must have an unambiguous
    rendering and must not collide with the reserved names.
    """
    verts = e.vertex_keys()
    rendered = {v: render_atom(v) for v in verts}
    if len(set(rendered.values())) != len(verts):
        raise ReservedKeyCollision("distinct vertex keys share a text rendering")
    for text in rendered.values():
        if text == DEG_COL or text.startswith(EDGE_PREFIX):
            raise ReservedKeyCollision(f"vertex key {text!r} clashes with a reserved column")
    return rendered


def build_single_table(e: EdgeList) -> GraphBundle:
    e = _require_undirected(e)
    names = _rendered_vertices(e)
    deg: dict[str, float] = {}
    trips = []
    for u, v, w in e.edges:
        ru, rv = names[u], names[v]
        trips.append((ru, EDGE_PREFIX + rv, w))
        trips.append((rv, EDGE_PREFIX + ru, w))
        deg[ru] = deg.get(ru, 0.0) + 1.0
        deg[rv] = deg.get(rv, 0.0) + 1.0
    trips.extend((r, DEG_COL, d) for r, d in deg.items())
    main = Assoc(trips)
    degree = main.select(":", "deg ")
    return GraphBundle(Schema.SINGLE, main, None, degree)


_BUILDERS = {
    Schema.ADJACENCY: build_adjacency,
    Schema.INCIDENCE: build_incidence,
    Schema.SINGLE: build_single_table,
}


def to_edge_list(g: GraphBundle) -> EdgeList:
    """Recover the normalized edge list a bundle was built from."""
    if g.schema is Schema.ADJACENCY:
        edges = [
            (u, v, w)
            for u, v, w in g.main.triples()
            if sort_token(u) < sort_token(v)
        ]
        return EdgeList(edges)
    if g.schema is Schema.INCIDENCE:
        by_row: dict[Key, list[tuple[Key, float]]] = {}
        for eid, v, w in g.main.triples():
            by_row.setdefault(eid, []).append((v, w))
        edges = []
        for eid in sorted(by_row, key=sort_token):
            cells = by_row[eid]
            if len(cells) != 2:
                raise SchemaMismatch(f"edge row {eid!r} has {len(cells)} entries, expected 2")
            (u, wu), (v, wv) = cells
            if wu != wv:
                raise SchemaMismatch(f"edge row {eid!r} carries unequal weights")
            edges.append((u, v, wu))
        return EdgeList(edges)
    if g.schema is Schema.SINGLE:
        seen: dict[tuple[Key, Key], float] = {}
        for u, col, w in g.main.select(":", "edge|* ").triples():
            v = col[len(EDGE_PREFIX):]
            pair = (u, v) if sort_token(u) < sort_token(v) else (v, u)
            seen[pair] = w
        return EdgeList([(u, v, w) for (u, v), w in seen.items()])
    raise SchemaMismatch(f"unknown schema {g.schema!r}")


def convert(g: GraphBundle, target: Schema) -> GraphBundle:
    if g.schema is target:
        return g
    return _BUILDERS[target](to_edge_list(g))


def canonical_adjacency(g: GraphBundle) -> tuple[Assoc, Assoc]:
    """(main, degree) of the adjacency form; the cross-schema comparison key."""
    adj = convert(g, Schema.ADJACENCY)
    return adj.main, adj.degree
