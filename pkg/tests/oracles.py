"""Independent brute-force reference implementations used by the tests.

Everything here is deliberately written with plain dicts, sets, and loops,
sharing no code with the package internals, so that agreement between the two
is meaningful.
"""

from collections import deque


def key_rank(k):
    # numbers sort before texts; mirrors the documented total order
    return (0, k) if isinstance(k, (int, float)) else (1, k)


def dense_matmul(a_triples, b_triples):
    """Plus-times product of two triple collections, key-aligned, as a dict."""
    a = {(r, c): v for r, c, v in a_triples}
    b = {(r, c): v for r, c, v in b_triples}
    a_rows = sorted({r for r, _ in a}, key=key_rank)
    a_cols = sorted({c for _, c in a}, key=key_rank)
    b_rows = sorted({r for r, _ in b}, key=key_rank)
    b_cols = sorted({c for _, c in b}, key=key_rank)
    inner = [k for k in a_cols if k in set(b_rows)]
    out = {}
    for r in a_rows:
        for c in b_cols:
            s = 0.0
            hit = False
            for k in inner:
                av = a.get((r, k))
                bv = b.get((k, c))
                if av is not None and bv is not None:
                    s += av * bv
                    hit = True
            if hit and s != 0.0:
                out[(r, c)] = s
    return out


def select_by_scan(keys, kind, arg):
    """Selector matching by linear scan over the (sorted) key list."""
    out = []
    for i, k in enumerate(keys):
        if kind == "all":
            out.append(i)
        elif kind == "list" and k in arg:
            out.append(i)
        elif kind == "prefix" and isinstance(k, str) and k.startswith(arg):
            out.append(i)
        elif kind == "range" and key_rank(arg[0]) <= key_rank(k) <= key_rank(arg[1]):
            out.append(i)
    if kind == "positional":
        lo, hi = arg
        out = [i for i in range(len(keys)) if lo - 1 <= i <= hi - 1]
    return out


def adjacency_sets(edges):
    """Undirected neighbor sets from (u, v, w) edges (loops ignored)."""
    nbrs = {}
    for u, v, *_ in edges:
        if u == v:
            continue
        nbrs.setdefault(u, set()).add(v)
        nbrs.setdefault(v, set()).add(u)
    return nbrs


def filtered_bfs(nbrs, starts, hops, min_deg, max_deg):
    """Queue-based BFS with the degree filter applied to each frontier
    before it expands; start vertices sit at hop 0 and never enter the
    reached map. Returns (reached {v: hop}, traversed {(u, v)})."""

    def deg_ok(v):
        d = len(nbrs.get(v, ()))
        return min_deg <= d <= (max_deg if max_deg is not None else d)

    starts = [s for s in dict.fromkeys(starts)]
    visited = set(starts)
    frontier = deque(starts)
    reached = {}
    traversed = set()
    for h in range(1, hops + 1):
        expandable = [v for v in frontier if deg_ok(v)]
        nxt = []
        seen_this_hop = set()
        for u in expandable:
            for v in nbrs.get(u, ()):
                if v in visited:
                    continue
                traversed.add((u, v))
                if v not in seen_this_hop:
                    seen_this_hop.add(v)
                    reached[v] = h
                    nxt.append(v)
        visited |= seen_this_hop
        frontier = nxt
        if not frontier:
            break
    return reached, traversed


def jaccard_by_sets(nbrs):
    """Jaccard coefficient for every unordered pair with a common neighbor."""
    verts = sorted(nbrs, key=key_rank)
    out = {}
    for i, u in enumerate(verts):
        for v in verts[i + 1 :]:
            inter = len(nbrs[u] & nbrs[v])
            if inter == 0:
                continue
            union = len(nbrs[u]) + len(nbrs[v]) - inter
            out[(u, v)] = inter / union
    return out


def truss_by_enumeration(edges, k):
    """k-truss via repeated triangle counting over explicit neighbor sets.

    Returns the surviving undirected edge set {(u, v)} with u < v in key
    order. k=2 keeps every edge of the (loop-free, deduplicated) graph.
    """
    cur = set()
    for u, v, *_ in edges:
        if u == v:
            continue
        a, b = sorted((u, v), key=key_rank)
        cur.add((a, b))
    while True:
        nbrs = {}
        for u, v in cur:
            nbrs.setdefault(u, set()).add(v)
            nbrs.setdefault(v, set()).add(u)
        drop = {e for e in cur if len(nbrs[e[0]] & nbrs[e[1]]) < k - 2}
        if not drop:
            return cur
        cur -= drop


def degree_map(edges):
    return {v: len(s) for v, s in adjacency_sets(edges).items()}
