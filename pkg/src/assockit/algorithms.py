"""Graph analytics over the three schemas, in memory or against stored tables.

Three algorithms: breadth-first search with a per-hop frontier degree band,
vertex-pair Jaccard similarity, and k-truss pruning. Each runs in two
execution modes chosen by the argument type. A GraphBundle runs locally on
associative arrays. A StoredGraph runs against the table store: filtering
happens in scan transforms, multiplication in streaming multiply jobs, and
the client holds only frontier-sized state (degree maps, edge weight maps,
survivor sets), never a whole product.

BFS semantics, shared by every schema and mode: the degree band filters the
frontier before expansion, never the vertices being discovered, and a vertex
is recorded at the hop where it first appears. Start vertices count as
already visited and are not part of the reached set. Traversed edges are
reported in adjacency coordinates (from-vertex, to-vertex, edge weight),
where the from side is the filtered frontier member.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import mult, workingset
from .assoc import Assoc
from .errors import SchemaMismatch, SinkCollision
from .keys import Key, normalize_key, sort_token
from .schemas import DEG_COL, EDGE_PREFIX, GraphBundle, Schema
from .selectors import KeyList, Prefix
from .store import RangeFilter, DegreeFilter, Store, TableHandle

SERVER_BATCH_LIMIT = 1 << 18
DEG_SUFFIX = "_deg"
XPOSE_SUFFIX = "_xpose"


@dataclass(frozen=True)
class BFSParams:
    """Search window: start vertices, hop budget, and a frontier degree band."""

    starts: tuple
    hops: int = 3
    min_degree: float = 1.0
    max_degree: float = math.inf
    degree_column: str = DEG_COL

    def __init__(self, starts, hops=3, min_degree=1.0, max_degree=math.inf,
                 degree_column=DEG_COL):
        if not isinstance(hops, int) or isinstance(hops, bool) or hops < 1:
            raise ValueError(f"hops must be a positive integer, got {hops!r}")
        if float(min_degree) > float(max_degree):
            raise ValueError("min_degree exceeds max_degree")
        ordered = tuple(dict.fromkeys(normalize_key(s) for s in starts))
        object.__setattr__(self, "starts", ordered)
        object.__setattr__(self, "hops", hops)
        object.__setattr__(self, "min_degree", float(min_degree))
        object.__setattr__(self, "max_degree", float(max_degree))
        object.__setattr__(self, "degree_column", degree_column)


@dataclass(frozen=True)
class BFSResult:
    """reached: (vertex, 'hop', hop index); traversed: frontier-to-new edges."""

    reached: Assoc
    traversed: Assoc

    def hop_sets(self) -> dict[int, set]:
        out: dict[int, set] = {}
        for v, _, h in self.reached.triples():
            out.setdefault(int(h), set()).add(v)
        return out


@dataclass(frozen=True)
class TrussParams:
    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 2:
            raise ValueError(f"truss order k must be an integer >= 2, got {self.k!r}")


@dataclass(frozen=True)
class StoredGraph:
    """Names of one graph's tables inside a store.

    The main array lives under `name`, degrees under `name_deg`, and the
    incidence schema keeps its transpose under `name_xpose`.
    """

    store: Store
    schema: Schema
    name: str

    def main_handle(self) -> TableHandle:
        return self.store.table(self.name)

    def degree_handle(self) -> TableHandle:
        return self.store.table(self.name + DEG_SUFFIX)

    def xpose_handle(self) -> TableHandle:
        return self.store.table(self.name + XPOSE_SUFFIX)


GraphLike = Union[GraphBundle, StoredGraph]


def write_graph(store: Store, bundle: GraphBundle, name: str) -> StoredGraph:
    """Ingest a bundle into the store under `name`, replacing prior tables."""
    for t in (name, name + DEG_SUFFIX, name + XPOSE_SUFFIX):
        if store.has_table(t):
            store.delete_table(t)
    sg = StoredGraph(store, bundle.schema, name)
    main = sg.main_handle()
    main.put(bundle.main.triples())
    main.flush()
    deg = sg.degree_handle()
    deg.put(bundle.degree.triples())
    deg.flush()
    if bundle.schema is Schema.INCIDENCE:
        xp = sg.xpose_handle()
        xp.put(bundle.transpose_table.triples())
        xp.flush()
    return sg


def read_graph(store: Store, name: str, schema: Schema) -> StoredGraph:
    """Bind an already-ingested graph, checking its tables exist."""
    needed = [name, name + DEG_SUFFIX]
    if schema is Schema.INCIDENCE:
        needed.append(name + XPOSE_SUFFIX)
    for t in needed:
        if not store.has_table(t):
            raise SchemaMismatch(f"stored graph {name!r} lacks table {t!r}")
    return StoredGraph(store, schema, name)


def materialize(sg: StoredGraph) -> GraphBundle:
    """Read a stored graph back into an in-memory bundle."""
    main = sg.main_handle().to_assoc()
    degree = sg.degree_handle().to_assoc()
    xpose = None
    if sg.schema is Schema.INCIDENCE:
        xpose = sg.xpose_handle().to_assoc()
    return GraphBundle(sg.schema, main, xpose, degree)


class _ClientCharge:
    """Working-set accounting for client-side dicts in server algorithms."""

    def __init__(self):
        self._tracker = workingset.current()
        self._held = 0

    def add(self, n: int) -> None:
        if self._tracker is not None and n > 0:
            self._tracker.acquire(n)
            self._held += n

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if self._tracker is not None and self._held:
            self._tracker.release(self._held)
        return False


# ---- breadth-first search ----------------------------------------------------------


def bfs(graph: GraphLike, params: BFSParams) -> BFSResult:
    """Degree-filtered BFS; execution mode follows the graph argument type."""
    if isinstance(graph, GraphBundle):
        expand = {
            Schema.ADJACENCY: _expand_adj_local,
            Schema.INCIDENCE: _expand_edge_local,
            Schema.SINGLE: _expand_single_local,
        }[graph.schema]
        degrees = _local_degrees(graph, params)
        return _bfs_loop(params, degrees.get, lambda f, vis: expand(graph, f, vis))
    if isinstance(graph, StoredGraph):
        expand = {
            Schema.ADJACENCY: _expand_adj_server,
            Schema.INCIDENCE: _expand_edge_server,
            Schema.SINGLE: _expand_single_server,
        }[graph.schema]
        degrees = _server_degrees(graph, params)
        return _bfs_loop(params, degrees.get, lambda f, vis: expand(graph, params, f, vis))
    raise TypeError(f"expected GraphBundle or StoredGraph, got {type(graph).__name__}")


def _bfs_loop(params: BFSParams, degree_of, expand) -> BFSResult:
    lo, hi = params.min_degree, params.max_degree
    visited = set(params.starts)
    frontier = list(params.starts)
    reached: list[tuple] = []
    traversed: list[tuple] = []
    for hop in range(1, params.hops + 1):
        front = [v for v in frontier if lo <= float(degree_of(v, 0.0)) <= hi]
        if not front:
            break
        new = set()
        for u, v, w in expand(front, visited):
            if v in visited:
                continue
            traversed.append((u, v, w))
            new.add(v)
        if not new:
            break
        reached.extend((v, "hop", float(hop)) for v in new)
        visited |= new
        frontier = sorted(new, key=sort_token)
    return BFSResult(Assoc(reached), Assoc(traversed))


def _local_degrees(g: GraphBundle, params: BFSParams) -> dict:
    if g.schema is Schema.SINGLE and params.degree_column != DEG_COL:
        src = g.main.select(":", KeyList([params.degree_column]))
    else:
        src = g.degree
    return {r: v for r, _, v in src.triples()}


def _server_degrees(sg: StoredGraph, params: BFSParams) -> dict:
    if sg.schema is Schema.SINGLE:
        scan = sg.main_handle().scan(
            [RangeFilter(cols=KeyList([params.degree_column]))]
        )
    else:
        scan = sg.degree_handle().scan([RangeFilter(cols=KeyList([DEG_COL]))])
    return {r: v for r, _, v in scan}


def _expand_adj_local(g: GraphBundle, front: list, visited: set):
    sub = g.main.select(KeyList(front), ":")
    return sub.triples()


def _pair_edge_rows(cells_by_edge: dict, front: list, visited: set):
    fset = set(front)
    for eid in sorted(cells_by_edge, key=sort_token):
        cells = cells_by_edge[eid]
        if len(cells) != 2:
            raise SchemaMismatch(
                f"edge row {eid!r} has {len(cells)} entries, expected 2"
            )
        (u, wu), (v, wv) = cells
        if u in fset and v not in visited:
            yield u, v, wu
        if v in fset and u not in visited:
            yield v, u, wv


def _expand_edge_local(g: GraphBundle, front: list, visited: set):
    hit = g.transpose_table.select(KeyList(front), ":")
    eids = sorted({e for _, e, _ in hit.triples()}, key=sort_token)
    if not eids:
        return
    ends = g.main.select(KeyList(eids), ":")
    by_edge: dict[Key, list] = {}
    for eid, v, w in ends.triples():
        by_edge.setdefault(eid, []).append((v, w))
    yield from _pair_edge_rows(by_edge, front, visited)


def _expand_single_local(g: GraphBundle, front: list, visited: set):
    sub = g.main.select(KeyList(front), Prefix(EDGE_PREFIX))
    for u, col, w in sub.triples():
        yield u, col[len(EDGE_PREFIX):], w


def _expand_adj_server(sg: StoredGraph, params: BFSParams, front: list, visited: set):
    # the degree band re-applies inside the store scan; RangeFilter narrows
    # rows to the frontier so both filters run server-side in one pass
    return sg.main_handle().scan(
        [
            RangeFilter(rows=KeyList(front)),
            DegreeFilter(
                params.min_degree,
                params.max_degree,
                sg.degree_handle(),
                DEG_COL,
            ),
        ]
    )


def _expand_edge_server(sg: StoredGraph, params: BFSParams, front: list, visited: set):
    hits = sg.xpose_handle().scan([RangeFilter(rows=KeyList(front))])
    eids = sorted({e for _, e, _ in hits}, key=sort_token)
    if not eids:
        return
    by_edge: dict[Key, list] = {}
    for eid, v, w in sg.main_handle().scan([RangeFilter(rows=KeyList(eids))]):
        by_edge.setdefault(eid, []).append((v, w))
    yield from _pair_edge_rows(by_edge, front, visited)


def _expand_single_server(sg: StoredGraph, params: BFSParams, front: list, visited: set):
    scan = sg.main_handle().scan(
        [RangeFilter(rows=KeyList(front), cols=Prefix(EDGE_PREFIX))]
    )
    for u, col, w in scan:
        yield u, col[len(EDGE_PREFIX):], w


# ---- jaccard similarity -------------------------------------------------------------


def jaccard(graph: GraphLike, out_name: Optional[str] = None):
    """Jaccard coefficient for every vertex pair sharing a neighbor.

    Results are strictly upper triangular in key order. Local mode returns an
    associative array; server mode writes a result table named `out_name`
    (default `<graph>_jacc`) and returns its handle.
    """
    if isinstance(graph, GraphBundle):
        _need_schema(graph, Schema.ADJACENCY, "jaccard")
        return _jaccard_local(graph)
    if isinstance(graph, StoredGraph):
        _need_schema(graph, Schema.ADJACENCY, "jaccard")
        return _jaccard_server(graph, out_name)
    raise TypeError(f"expected GraphBundle or StoredGraph, got {type(graph).__name__}")


def _need_schema(g, schema: Schema, what: str) -> None:
    if g.schema is not schema:
        raise SchemaMismatch(f"{what} needs the {schema.value} schema, got {g.schema.value}")


def _jaccard_local(g: GraphBundle) -> Assoc:
    L = g.main.logical()
    counts = L @ L
    if not counts.nnz:
        return Assoc()
    upper = counts._take(np.flatnonzero(counts._ri < counts._ci))
    if not upper.nnz:
        return Assoc()
    degs = {r: v for r, _, v in g.degree.triples()}
    dr = np.fromiter((degs[k] for k in upper.row_keys), dtype=np.float64,
                     count=len(upper.row_keys))
    dc = np.fromiter((degs[k] for k in upper.col_keys), dtype=np.float64,
                     count=len(upper.col_keys))
    inter = upper._vals
    union = dr[upper._ri] + dc[upper._ci] - inter
    return Assoc._from_arrays(
        upper.row_keys, upper.col_keys, upper._ri, upper._ci,
        inter / union, True, sort=False,
    )


def _jaccard_server(sg: StoredGraph, out_name: Optional[str]) -> TableHandle:
    out_name = out_name or sg.name + "_jacc"
    if sg.store.has_table(out_name) and not sg.store.table(out_name).is_empty():
        raise SinkCollision(f"output table {out_name!r} is not empty")
    main = sg.main_handle()
    tmp_name = f"tmp_jn_{out_name}"
    if sg.store.has_table(tmp_name):
        sg.store.delete_table(tmp_name)
    inter = sg.store.table(tmp_name)
    try:
        mult.table_mult(
            main, main, inter,
            a_transpose=main, upper_only=True, logical=True,
            batch_limit=SERVER_BATCH_LIMIT,
        )
        with _ClientCharge() as charge:
            degs = {r: v for r, _, v in sg.degree_handle().scan()}
            charge.add(len(degs))
            out = sg.store.table(out_name)
            out.put(
                (u, v, n / (degs[u] + degs[v] - n))
                for u, v, n in inter.scan()
            )
            out.flush()
    finally:
        sg.store.delete_table(tmp_name)
    return out


# ---- k-truss ------------------------------------------------------------------------


def k_truss(graph: GraphLike, params: TrussParams, out_name: Optional[str] = None):
    """Largest subgraph whose every edge closes at least k-2 triangles.

    Local mode maps a bundle to a bundle; server mode reads and writes store
    tables (result under `out_name`, default `<graph>_truss<k>`). k = 2
    accepts every edge, so the input comes back unchanged.
    """
    if isinstance(graph, GraphBundle):
        _need_schema(graph, Schema.ADJACENCY, "k-truss")
        if params.k == 2:
            return graph
        return _truss_local(graph, params.k)
    if isinstance(graph, StoredGraph):
        _need_schema(graph, Schema.ADJACENCY, "k-truss")
        if params.k == 2:
            return graph
        return _truss_server(graph, params.k, out_name)
    raise TypeError(f"expected GraphBundle or StoredGraph, got {type(graph).__name__}")


def k_truss_edge(graph: GraphLike, params: TrussParams, out_name: Optional[str] = None):
    """k-truss of an incidence graph; surviving edges keep their row ids."""
    if isinstance(graph, GraphBundle):
        _need_schema(graph, Schema.INCIDENCE, "edge k-truss")
        if params.k == 2:
            return graph
        return _truss_edge_local(graph, params.k)
    if isinstance(graph, StoredGraph):
        _need_schema(graph, Schema.INCIDENCE, "edge k-truss")
        if params.k == 2:
            return graph
        return _truss_edge_server(graph, params.k, out_name)
    raise TypeError(f"expected GraphBundle or StoredGraph, got {type(graph).__name__}")


def _truss_local(g: GraphBundle, k: int) -> GraphBundle:
    cur = g.main
    while cur.nnz:
        L = cur.logical()
        support = (L @ L).mask(L)
        keep = np.flatnonzero(support._vals >= k - 2)
        if len(keep) == cur.nnz:
            break
        cur = cur.mask(support._take(keep)) if len(keep) else Assoc()
    degree = cur.logical().reduce_rows()
    return GraphBundle(Schema.ADJACENCY, cur, None, degree)


def _incidence_edges(main: Assoc) -> dict[Key, tuple]:
    """Edge id -> (u, v, weight) for an incidence array."""
    by_edge: dict[Key, list] = {}
    for eid, v, w in main.triples():
        by_edge.setdefault(eid, []).append((v, w))
    out = {}
    for eid, cells in by_edge.items():
        if len(cells) != 2:
            raise SchemaMismatch(f"edge row {eid!r} has {len(cells)} entries, expected 2")
        (u, wu), (v, wv) = cells
        if wu != wv:
            raise SchemaMismatch(f"edge row {eid!r} carries unequal weights")
        out[eid] = (u, v, wu)
    return out


def _incidence_bundle(edges: dict[Key, tuple]) -> GraphBundle:
    trips = []
    for eid, (u, v, w) in edges.items():
        trips.append((eid, u, w))
        trips.append((eid, v, w))
    main = Assoc(trips)
    xpose = main.transpose()
    degree = xpose.logical().reduce_rows()
    return GraphBundle(Schema.INCIDENCE, main, xpose, degree)


def _truss_edge_local(g: GraphBundle, k: int) -> GraphBundle:
    edges = _incidence_edges(g.main)
    adj_trips = []
    for u, v, w in edges.values():
        adj_trips.append((u, v, w))
        adj_trips.append((v, u, w))
    adj_main = Assoc(adj_trips)
    adj = GraphBundle(Schema.ADJACENCY, adj_main, None,
                      adj_main.logical().reduce_rows())
    pruned = _truss_local(adj, k)
    alive = {
        (u, v)
        for u, v, _ in pruned.main.triples()
        if sort_token(u) < sort_token(v)
    }
    kept = {
        eid: (u, v, w)
        for eid, (u, v, w) in edges.items()
        if _orient(u, v) in alive
    }
    return _incidence_bundle(kept)


def _orient(u: Key, v: Key) -> tuple:
    return (u, v) if sort_token(u) < sort_token(v) else (v, u)


def _server_truss_pairs(store: Store, main: TableHandle, k: int, scratch: str,
                        charge: _ClientCharge) -> dict[tuple, float]:
    """Surviving oriented edge pairs (with weights) of the stored k-truss."""
    weights: dict[tuple, float] = {}
    for u, v, w in main.scan():
        if sort_token(u) < sort_token(v):
            weights[(u, v)] = w
    charge.add(len(weights))
    cur_pairs = dict(weights)
    cur = main
    temp: Optional[str] = None
    round_no = 0
    try:
        while cur_pairs:
            sup_name = f"{scratch}_sup"
            if store.has_table(sup_name):
                store.delete_table(sup_name)
            sup = store.table(sup_name)
            mult.table_mult(
                cur, cur, sup,
                a_transpose=cur, mask=cur, upper_only=True, logical=True,
                batch_limit=SERVER_BATCH_LIMIT,
            )
            survivors = {
                (u, v) for u, v, s in sup.scan() if s >= k - 2
            }
            charge.add(len(survivors))
            store.delete_table(sup_name)
            if len(survivors) == len(cur_pairs):
                break
            cur_pairs = {p: weights[p] for p in survivors}
            if not cur_pairs:
                break
            round_no += 1
            next_name = f"{scratch}_it{round_no}"
            if store.has_table(next_name):
                store.delete_table(next_name)
            nxt = store.table(next_name)
            nxt.put(_both_directions(cur_pairs))
            nxt.flush()
            if temp is not None:
                store.delete_table(temp)
            temp = next_name
            cur = nxt
    finally:
        if temp is not None:
            store.delete_table(temp)
        if store.has_table(f"{scratch}_sup"):
            store.delete_table(f"{scratch}_sup")
    return cur_pairs


def _both_directions(pairs: dict[tuple, float]):
    for (u, v), w in pairs.items():
        yield u, v, w
        yield v, u, w


def _degree_triples(pairs: dict[tuple, float]):
    deg: dict[Key, float] = {}
    for u, v in pairs:
        deg[u] = deg.get(u, 0.0) + 1.0
        deg[v] = deg.get(v, 0.0) + 1.0
    return [(r, DEG_COL, d) for r, d in deg.items()]


def _fresh_tables(store: Store, names: list[str]) -> None:
    for n in names:
        if store.has_table(n):
            store.delete_table(n)


def _truss_server(sg: StoredGraph, k: int, out_name: Optional[str]) -> StoredGraph:
    out_name = out_name or f"{sg.name}_truss{k}"
    with _ClientCharge() as charge:
        pairs = _server_truss_pairs(
            sg.store, sg.main_handle(), k, f"tmp_kt_{out_name}", charge
        )
        _fresh_tables(sg.store, [out_name, out_name + DEG_SUFFIX])
        main = sg.store.table(out_name)
        main.put(_both_directions(pairs))
        main.flush()
        deg = sg.store.table(out_name + DEG_SUFFIX)
        deg.put(_degree_triples(pairs))
        deg.flush()
    return StoredGraph(sg.store, Schema.ADJACENCY, out_name)


def _truss_edge_server(sg: StoredGraph, k: int, out_name: Optional[str]) -> StoredGraph:
    out_name = out_name or f"{sg.name}_truss{k}"
    store = sg.store
    with _ClientCharge() as charge:
        by_edge: dict[Key, list] = {}
        for eid, v, w in sg.main_handle().scan():
            by_edge.setdefault(eid, []).append((v, w))
        edges = {}
        for eid, cells in by_edge.items():
            if len(cells) != 2:
                raise SchemaMismatch(
                    f"edge row {eid!r} has {len(cells)} entries, expected 2"
                )
            (u, wu), (v, wv) = cells
            edges[eid] = (u, v, wu)
        charge.add(len(edges))

        adj_name = f"tmp_ka_{out_name}"
        _fresh_tables(store, [adj_name])
        adj = store.table(adj_name)
        adj.put(
            trip
            for u, v, w in edges.values()
            for trip in ((u, v, w), (v, u, w))
        )
        adj.flush()
        try:
            pairs = _server_truss_pairs(store, adj, k, f"tmp_kt_{out_name}", charge)
        finally:
            store.delete_table(adj_name)

        kept = {
            eid: (u, v, w)
            for eid, (u, v, w) in edges.items()
            if _orient(u, v) in pairs
        }
        _fresh_tables(
            store, [out_name, out_name + DEG_SUFFIX, out_name + XPOSE_SUFFIX]
        )
        main = store.table(out_name)
        main.put(
            trip
            for eid, (u, v, w) in kept.items()
            for trip in ((eid, u, w), (eid, v, w))
        )
        main.flush()
        xp = store.table(out_name + XPOSE_SUFFIX)
        xp.put(
            trip
            for eid, (u, v, w) in kept.items()
            for trip in ((u, eid, w), (v, eid, w))
        )
        xp.flush()
        deg = store.table(out_name + DEG_SUFFIX)
        deg.put(_degree_triples({(u, v): w for (u, v, w) in kept.values()}))
        deg.flush()
    return StoredGraph(store, Schema.INCIDENCE, out_name)
