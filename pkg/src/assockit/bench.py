"""Benchmark harness: timing cells over a scale/seed matrix, both modes.

Each cell runs one algorithm on one schema in one execution mode at one
(scale, seed) point and appends a comma-separated record to a results file.
The file is line-oriented and append-only: a version line, a header row,
then one record per cell, so a crashed run still leaves a parseable prefix.

Timing covers the algorithm call only; generation and ingest happen outside
the timed window, and one warmup iteration per cell is discarded by default.
The cyclic garbage collector is collected and then paused around each timed
iteration so collector pauses do not land inside individual measurements,
and cells faster than a quarter second are re-measured a few times with the
minimum recorded, since single-shot millisecond walls mostly measure the
scheduler.
Local cells normally receive a materialized in-memory bundle before the
clock starts. With include_query_time set, the full table scan and bundle
construction move inside the timed window, the "how long including fetching
the graph from the store" variant. Server cells always scan inside the
store, so the flag does not change what they measure.

Result-entry counts are deterministic for a given (scale, degree, seed) and
mode-invariant, which is what makes repeated runs comparable; wall times are
the only quantity expected to vary.
"""

from __future__ import annotations

import csv
import gc
import os
import random
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .algorithms import (
    DEG_SUFFIX,
    XPOSE_SUFFIX,
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
from .assoc import Assoc
from .errors import InvalidCell, IoFailure
from .generator import GenConfig, generate
from .keys import sort_token
from .schemas import (
    GraphBundle,
    Schema,
    build_adjacency,
    build_incidence,
    build_single_table,
)
from .store import Store, TableHandle

RESULTS_MAGIC = "# assockit-bench-v1"
CSV_FIELDS = (
    "algorithm",
    "schema",
    "mode",
    "scale",
    "degree",
    "seed",
    "wall_seconds",
    "result_entries",
    "includes_query_time",
    "status",
)

ALGORITHM_SCHEMAS = {
    "bfs": (Schema.ADJACENCY, Schema.INCIDENCE, Schema.SINGLE),
    "jaccard": (Schema.ADJACENCY,),
    "ktruss": (Schema.ADJACENCY, Schema.INCIDENCE),
}
MODES = ("local", "server")

DEFAULT_SCALES = (8, 9, 10, 11, 12)
DEFAULT_DEGREE = 16
DEFAULT_SEED_COUNT = 3

# Cells whose wall time lands under the floor are re-measured up to the cap
# and the minimum is recorded: single-shot walls at millisecond scale are
# dominated by scheduler preemption, and the minimum over a handful of runs
# is the usual estimator of the undisturbed time. Slow cells stay single-shot
# so large matrices do not multiply their cost.
REPEAT_FLOOR_SECONDS = 0.25
MAX_TIMED_REPEATS = 5
START_COUNT = 5

_BUILDERS = {
    Schema.ADJACENCY: build_adjacency,
    Schema.INCIDENCE: build_incidence,
    Schema.SINGLE: build_single_table,
}


@dataclass(frozen=True)
class BenchRecord:
    """One benchmark cell: what ran, how long it took, how much it produced."""

    algorithm: str
    schema: str
    mode: str
    scale: int
    degree: int
    seed: int
    wall_seconds: float
    result_entries: int
    includes_query_time: bool
    status: str = "ok"

    def as_row(self) -> list:
        return [
            self.algorithm,
            self.schema,
            self.mode,
            str(self.scale),
            str(self.degree),
            str(self.seed),
            f"{self.wall_seconds:.9f}",
            str(self.result_entries),
            "1" if self.includes_query_time else "0",
            self.status,
        ]

    def cell_id(self) -> tuple:
        """Identity of the cell, excluding measured quantities."""
        return (self.algorithm, self.schema, self.mode, self.scale, self.degree, self.seed)

    def as_line(self) -> str:
        return ",".join(self.as_row())


# ---- results file -------------------------------------------------------------------


def open_results(path):
    """Open a results file for appending, writing the versioned header if new."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    if not fresh:
        with open(path, "r", encoding="utf-8", newline="") as fp:
            first = fp.readline().rstrip("\r\n")
        if first != RESULTS_MAGIC:
            raise IoFailure(f"{path} is not a benchmark results file")
    fp = open(path, "a", encoding="utf-8", newline="")
    if fresh:
        fp.write(RESULTS_MAGIC + "\n")
        csv.writer(fp, lineterminator="\n").writerow(CSV_FIELDS)
        fp.flush()
    return fp


def read_records(path) -> list:
    """Parse a results file; a trailing partial line (crashed run) is skipped."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fp:
        first = fp.readline().rstrip("\r\n")
        if first != RESULTS_MAGIC:
            raise IoFailure(f"{path} is not a benchmark results file")
        reader = csv.reader(fp)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_FIELDS:
            raise IoFailure(f"{path} has an unrecognized header row")
        for row in reader:
            if len(row) != len(CSV_FIELDS):
                continue
            out.append(
                BenchRecord(
                    algorithm=row[0],
                    schema=row[1],
                    mode=row[2],
                    scale=int(row[3]),
                    degree=int(row[4]),
                    seed=int(row[5]),
                    wall_seconds=float(row[6]),
                    result_entries=int(row[7]),
                    includes_query_time=row[8] == "1",
                    status=row[9],
                )
            )
    return out


# ---- graph provisioning -------------------------------------------------------------


def graph_table_name(scale: int, degree: int, seed: int, schema: Schema) -> str:
    return f"g{scale}d{degree}s{seed}_{schema.value}"


def ensure_graphs(
    store: Store, scale: int, degree: int, seed: int, schemas: Sequence[Schema]
) -> dict:
    """Ingest the generated graph under each schema, reusing existing tables.

    Generation happens at most once per call; repeated runs against the same
    workspace skip it entirely.
    """
    out = {}
    missing = []
    for sch in schemas:
        name = graph_table_name(scale, degree, seed, sch)
        if store.has_table(name):
            out[sch] = read_graph(store, name, sch)
        else:
            missing.append(sch)
    if missing:
        edges = generate(GenConfig(scale, degree, seed))
        for sch in missing:
            bundle = _BUILDERS[sch](edges)
            out[sch] = write_graph(store, bundle, graph_table_name(scale, degree, seed, sch))
    return out


def sample_starts(sg: StoredGraph, scale: int, seed: int, count: int = START_COUNT) -> tuple:
    """Deterministic start vertices drawn from the graph's degree table.

    The vertex set is schema-invariant, so any schema's degree table yields
    the same sample for a given (scale, seed).
    """
    verts = sorted((r for r, _, _ in sg.degree_handle().scan()), key=sort_token)
    rng = random.Random(seed * 1000003 + scale)
    return tuple(rng.sample(verts, min(count, len(verts))))


# ---- cell execution -----------------------------------------------------------------


def plan_cells(
    algorithms: Sequence[str], schemas: Sequence, modes: Sequence[str]
) -> list:
    """Expand requested sets into (algorithm, schema, mode) cells.

    Pairings an algorithm cannot run (jaccard off adjacency, truss on the
    single-table schema) are dropped; an algorithm left with no valid schema
    at all is a caller error.
    """
    norm_schemas = tuple(s if isinstance(s, Schema) else Schema(s) for s in schemas)
    cells = []
    for alg in algorithms:
        if alg not in ALGORITHM_SCHEMAS:
            raise InvalidCell(f"unknown algorithm {alg!r}")
        valid = [s for s in norm_schemas if s in ALGORITHM_SCHEMAS[alg]]
        if not valid:
            wanted = ", ".join(s.value for s in norm_schemas)
            raise InvalidCell(f"{alg} cannot run on any requested schema ({wanted})")
        for sch in valid:
            for mode in modes:
                if mode not in MODES:
                    raise InvalidCell(f"unknown mode {mode!r}")
                cells.append((alg, sch, mode))
    return cells


def result_entries(result) -> int:
    """Entry count of an algorithm result, whatever form it came back in."""
    if isinstance(result, BFSResult):
        return result.reached.nnz
    if isinstance(result, Assoc):
        return result.nnz
    if isinstance(result, GraphBundle):
        return result.main.nnz
    if isinstance(result, TableHandle):
        return result.scan_ranked().nnz
    if isinstance(result, StoredGraph):
        return result.main_handle().scan_ranked().nnz
    raise TypeError(f"unrecognized result type {type(result).__name__}")


def _drop_result_tables(store: Store, result, keep: str) -> None:
    """Delete a server-side result so the cell can run again; keep the input."""
    if isinstance(result, TableHandle):
        if result.name != keep:
            store.delete_table(result.name)
    elif isinstance(result, StoredGraph):
        if result.name == keep:
            return
        for suffix in ("", DEG_SUFFIX, XPOSE_SUFFIX):
            name = result.name + suffix
            if store.has_table(name):
                store.delete_table(name)


def _measure_cell(
    store: Store,
    sg: StoredGraph,
    algorithm: str,
    mode: str,
    *,
    include_query_time: bool,
    starts: tuple,
    k: int,
    hops: int,
    min_degree: float,
    max_degree: float,
    warmup: int,
) -> tuple:
    """Time one cell after warmup; return (wall_seconds, entries).

    Fast cells (under REPEAT_FLOOR_SECONDS) are re-measured up to
    MAX_TIMED_REPEATS times and the minimum wall is recorded.
    """
    if algorithm == "bfs":
        params = BFSParams(starts, hops=hops, min_degree=min_degree, max_degree=max_degree)
        call = lambda g: bfs(g, params)
    elif algorithm == "jaccard":
        out_name = sg.name + "_jacc_bench"
        if store.has_table(out_name):
            store.delete_table(out_name)
        call = lambda g: jaccard(g, out_name) if isinstance(g, StoredGraph) else jaccard(g)
    elif algorithm == "ktruss":
        tp = TrussParams(k)
        fn = k_truss if sg.schema is Schema.ADJACENCY else k_truss_edge
        call = lambda g: fn(g, tp)
    else:
        raise InvalidCell(f"unknown algorithm {algorithm!r}")

    if mode == "local":
        if include_query_time:
            def once():
                t0 = time.perf_counter()
                bundle = materialize(sg)
                result = call(bundle)
                return time.perf_counter() - t0, result
        else:
            bundle = materialize(sg)

            def once():
                t0 = time.perf_counter()
                result = call(bundle)
                return time.perf_counter() - t0, result
    else:
        def once():
            t0 = time.perf_counter()
            result = call(sg)
            return time.perf_counter() - t0, result

    entries = 0
    for _ in range(max(0, warmup)):
        _, result = once()
        entries = result_entries(result)
        _drop_result_tables(store, result, keep=sg.name)

    best = None
    for _ in range(MAX_TIMED_REPEATS):
        # keep collector pauses out of the timed window; reference counting
        # still reclaims the transient structures the algorithms build
        gc.collect()
        was_enabled = gc.isenabled()
        gc.disable()
        try:
            wall, result = once()
        finally:
            if was_enabled:
                gc.enable()
        entries = result_entries(result)
        _drop_result_tables(store, result, keep=sg.name)
        best = wall if best is None else min(best, wall)
        if best >= REPEAT_FLOOR_SECONDS:
            break
    return max(best, 1e-9), entries


def run_benchmark(
    workspace,
    results_path,
    *,
    scales: Sequence[int] = DEFAULT_SCALES,
    degree: int = DEFAULT_DEGREE,
    seeds: Sequence[int] = tuple(range(DEFAULT_SEED_COUNT)),
    algorithms: Sequence[str] = ("bfs", "jaccard", "ktruss"),
    schemas: Sequence = (Schema.ADJACENCY, Schema.INCIDENCE, Schema.SINGLE),
    modes: Sequence[str] = MODES,
    include_query_time: bool = False,
    k: int = 3,
    hops: int = 3,
    min_degree: float = 1.0,
    max_degree: float = 100.0,
    warmup: int = 1,
    echo: Optional[Callable] = None,
) -> list:
    """Run the cell matrix sequentially, appending one record per cell.

    Graph tables live in a store under `workspace` and are reused by later
    runs against the same directory. A failing cell is recorded with status
    `failed:<ErrorName>` and the run continues; everything already written
    stays valid. Returns the records in execution order.
    """
    cells = plan_cells(algorithms, schemas, modes)
    wanted = []
    for _, sch, _ in cells:
        if sch not in wanted:
            wanted.append(sch)
    records = []
    with Store(workspace) as store, open_results(results_path) as out:
        writer = csv.writer(out, lineterminator="\n")
        for scale in scales:
            for seed in seeds:
                graphs = ensure_graphs(store, scale, degree, seed, wanted)
                starts = sample_starts(graphs[wanted[0]], scale, seed)
                for algorithm, schema, mode in cells:
                    began = time.perf_counter()
                    try:
                        wall, entries = _measure_cell(
                            store,
                            graphs[schema],
                            algorithm,
                            mode,
                            include_query_time=include_query_time,
                            starts=starts,
                            k=k,
                            hops=hops,
                            min_degree=min_degree,
                            max_degree=max_degree,
                            warmup=warmup,
                        )
                        status = "ok"
                    except Exception as exc:
                        wall = max(time.perf_counter() - began, 1e-9)
                        entries = 0
                        status = "failed:" + type(exc).__name__
                    rec = BenchRecord(
                        algorithm,
                        schema.value,
                        mode,
                        scale,
                        degree,
                        seed,
                        wall,
                        entries,
                        include_query_time,
                        status,
                    )
                    writer.writerow(rec.as_row())
                    out.flush()
                    records.append(rec)
                    if echo is not None:
                        echo(rec)
    return records
