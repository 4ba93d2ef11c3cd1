"""assockit: associative-array analytics.

Sparse arrays keyed by strings or numbers, a selector mini-language, graph
construction in three table schemas, linear-algebraic graph algorithms that
run in memory or inside an embedded sorted key-value store, a deterministic
power-law graph generator, and a benchmark CLI.
"""

from .algorithms import (
    BFSParams,
    BFSResult,
    StoredGraph,
    TrussParams,
    bfs,
    jaccard,
    k_truss,
    k_truss_edge,
    materialize,
    read_graph,
    write_graph,
)
from .assoc import Assoc, CollisionRule, MultiplyMode, Triple
from .bench import BenchRecord, read_records, run_benchmark
from .errors import AssocKitError
from .generator import GenConfig, degree_histogram, generate
from .mult import MultReport, build_transpose, table_mult
from .schemas import (
    EdgeList,
    GraphBundle,
    Schema,
    build_adjacency,
    build_incidence,
    build_single_table,
    canonical_adjacency,
    convert,
)
from .selectors import ALL, KeyList, KeyRange, Positional, Prefix, Selector, match_keys, parse_selector
from .store import DegreeFilter, MultiplyJoin, RangeFilter, Store, TableHandle, ValueFilter
from .workingset import WorkingSetTracker, track

__version__ = "0.1.0"

__all__ = [
    "ALL",
    "Assoc",
    "AssocKitError",
    "BFSParams",
    "BFSResult",
    "BenchRecord",
    "CollisionRule",
    "DegreeFilter",
    "EdgeList",
    "GenConfig",
    "GraphBundle",
    "KeyList",
    "KeyRange",
    "MultReport",
    "MultiplyJoin",
    "MultiplyMode",
    "Positional",
    "Prefix",
    "RangeFilter",
    "Schema",
    "Selector",
    "Store",
    "StoredGraph",
    "TableHandle",
    "Triple",
    "TrussParams",
    "ValueFilter",
    "WorkingSetTracker",
    "bfs",
    "build_adjacency",
    "build_incidence",
    "build_single_table",
    "build_transpose",
    "canonical_adjacency",
    "convert",
    "degree_histogram",
    "generate",
    "jaccard",
    "k_truss",
    "k_truss_edge",
    "match_keys",
    "materialize",
    "parse_selector",
    "read_graph",
    "read_records",
    "run_benchmark",
    "table_mult",
    "track",
    "write_graph",
    "__version__",
]
