"""Command-line front end: generate, ingest, query, run algorithms, benchmark.

Exit codes: 0 success, 1 usage error, 2 data error (bad selector, missing
table, schema mismatch, bad parameters), 3 I/O failure. Every failure prints
a one-line diagnostic on stderr.

Selector strings follow the trailing-delimiter grammar (`alice `, `al* `,
`alice : bob `, `:`). Bare digit forms `N` and `LO:HI` are positional
(1-based key positions); the CLI resolves them against the table's sorted
distinct keys before scanning, since positions are not meaningful inside a
range scan.
"""

from __future__ import annotations

import argparse
import re
import sys
import time

from . import bench as bench_mod
from . import tripleio
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
from .assoc import Assoc
from .bench import BenchRecord
from .errors import (
    CorruptManifest,
    IncompatibleCollisionRule,
    InvalidCell,
    InvalidName,
    IoFailure,
    MissingTable,
    MixedValueVariant,
    ReservedKeyCollision,
    ScaleTooLarge,
    SchemaMismatch,
    SelectorError,
    SelfLoop,
    SinkCollision,
    WriterConflict,
)
from .generator import GenConfig, generate
from .keys import parse_number, sort_token
from .schemas import (
    EdgeList,
    GraphBundle,
    Schema,
    build_adjacency,
    build_incidence,
    build_single_table,
)
from .selectors import KeyList, Positional, match_keys, parse_selector
from .store import RangeFilter, Store, TableHandle, ValueFilter

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

_SCHEMA_CHOICES = tuple(s.value for s in Schema)
_BUILDERS = {
    Schema.ADJACENCY: build_adjacency,
    Schema.INCIDENCE: build_incidence,
    Schema.SINGLE: build_single_table,
}
_POSITIONAL_RE = re.compile(r"^(\d+)(?::(\d+))?$")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this front end reserves 2 for
    data errors, so usage problems are remapped to exit code 1."""

    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _diag(code: int, message: str) -> int:
    print(message, file=sys.stderr)
    return code


# ---- selectors ----------------------------------------------------------------------


def cli_selector(text: str):
    """Parse a CLI selector string, admitting bare `N` / `LO:HI` positionals."""
    m = _POSITIONAL_RE.match(text)
    if m:
        lo = int(m.group(1))
        hi = int(m.group(2)) if m.group(2) else lo
        return Positional(lo, hi)
    return parse_selector(text)


def _resolve_positional(handle: TableHandle, sel, axis: int):
    """Turn a positional window into an explicit key list via a prescan.

    Returns None when the window lands past the last key, meaning the query
    selects nothing.
    """
    if not isinstance(sel, Positional):
        return sel
    seen = dict.fromkeys(t[axis] for t in handle.scan())
    keys = sorted(seen, key=sort_token)
    picked = [keys[i] for i in match_keys(sel, keys)]
    if not picked:
        return None
    return KeyList(tuple(picked))


# ---- subcommands --------------------------------------------------------------------


def cmd_gen(args) -> int:
    edges = generate(GenConfig(args.scale, args.degree, args.seed))
    if args.out == "-":
        edges.write(sys.stdout)
    else:
        n = edges.write(args.out)
        print(f"wrote {n} edge triples to {args.out}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    source = sys.stdin if args.file == "-" else args.file
    edges = EdgeList.read(source)
    schema = Schema(args.schema)
    bundle = _BUILDERS[schema](edges)
    with Store(args.db) as store:
        write_graph(store, bundle, args.table)
    print(
        f"ingested {bundle.edge_count()} edges into table {args.table!r}"
        f" ({schema.value} schema, {bundle.main.nnz} main entries)"
    )
    return EXIT_OK


def cmd_query(args) -> int:
    with Store(args.db) as store:
        if not store.has_table(args.table):
            raise MissingTable(f"no table {args.table!r} in {args.db}")
        handle = store.table(args.table)
        row_sel = _resolve_positional(handle, cli_selector(args.row), axis=0)
        col_sel = _resolve_positional(handle, cli_selector(args.col), axis=1)
        if row_sel is None or col_sel is None:
            triples = iter(())
            if args.out == "-":
                tripleio.write_triples(sys.stdout, triples)
            else:
                tripleio.write_triples(args.out, triples)
                print(f"wrote 0 triples to {args.out}")
            return EXIT_OK
        transforms = [RangeFilter(rows=row_sel, cols=col_sel)]
        if args.value is not None:
            if store.tables_meta[args.table].variant == "number":
                num = parse_number(args.value)
                if num is None:
                    raise ValueError(f"--value {args.value!r} is not numeric")
                transforms.append(ValueFilter(num))
            else:
                transforms.append(ValueFilter(args.value))
        triples = handle.scan(transforms)
        if args.out == "-":
            tripleio.write_triples(sys.stdout, triples)
        else:
            n = tripleio.write_triples(args.out, triples)
            print(f"wrote {n} triples to {args.out}")
    return EXIT_OK


def _result_triples(result):
    if isinstance(result, BFSResult):
        return result.reached.triples()
    if isinstance(result, Assoc):
        return result.triples()
    if isinstance(result, GraphBundle):
        return result.main.triples()
    if isinstance(result, TableHandle):
        return result.scan()
    if isinstance(result, StoredGraph):
        return result.main_handle().scan()
    raise TypeError(f"unrecognized result type {type(result).__name__}")


def _parse_starts(text: str, sg: StoredGraph, scale: int, seed: int) -> tuple:
    """Explicit comma-separated vertex keys, or a bare count to sample.

    A single key that happens to be all digits can be forced explicit with a
    trailing comma (`--starts 0005,`).
    """
    if "," in text:
        keys = tuple(k for k in text.split(",") if k)
        if not keys:
            raise ValueError("empty start list")
        return keys
    if text.isdigit():
        return bench_mod.sample_starts(sg, scale, seed, count=int(text))
    return (text,)


def cmd_algo(args) -> int:
    schema = Schema(args.schema)
    with Store(args.db) as store:
        if not store.has_table(args.table):
            raise MissingTable(f"no table {args.table!r} in {args.db}")
        sg = read_graph(store, args.table, schema)
        if args.name == "bfs":
            starts = _parse_starts(args.starts, sg, args.scale, args.seed)
            params = BFSParams(
                starts, hops=args.hops, min_degree=args.min_deg, max_degree=args.max_deg
            )
            run = lambda g: bfs(g, params)
        elif args.name == "jaccard":
            run = lambda g: jaccard(g)
        else:
            if schema is Schema.SINGLE:
                raise SchemaMismatch("ktruss needs the adjacency or incidence schema")
            tp = TrussParams(args.k)
            fn = k_truss if schema is Schema.ADJACENCY else k_truss_edge
            run = lambda g: fn(g, tp)

        if args.mode == "local":
            if args.include_query_time:
                t0 = time.perf_counter()
                result = run(materialize(sg))
                wall = time.perf_counter() - t0
            else:
                bundle = materialize(sg)
                t0 = time.perf_counter()
                result = run(bundle)
                wall = time.perf_counter() - t0
        else:
            t0 = time.perf_counter()
            result = run(sg)
            wall = time.perf_counter() - t0

        entries = bench_mod.result_entries(result)
        rec = BenchRecord(
            args.name,
            schema.value,
            args.mode,
            args.scale,
            args.degree,
            args.seed,
            max(wall, 1e-9),
            entries,
            args.include_query_time,
        )
        print(rec.as_line())
        if isinstance(result, (TableHandle, StoredGraph)) and result.name != sg.name:
            print(f"result stored under table {result.name!r}", file=sys.stderr)
        if args.out:
            n = tripleio.write_triples(args.out, _result_triples(result))
            print(f"wrote {n} result triples to {args.out}", file=sys.stderr)
    return EXIT_OK


def _parse_scales(text: str) -> tuple:
    if ":" in text:
        lo_s, hi_s = text.split(":", 1)
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ValueError(f"bad scale range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(s) for s in text.split(",") if s)


def _csv_set(text: str) -> tuple:
    return tuple(s for s in text.split(",") if s)


def cmd_bench(args) -> int:
    records = bench_mod.run_benchmark(
        args.db,
        args.out,
        scales=_parse_scales(args.scales),
        degree=args.degree,
        seeds=tuple(range(args.seeds)),
        algorithms=_csv_set(args.algorithms),
        schemas=_csv_set(args.schemas),
        modes=_csv_set(args.modes),
        include_query_time=args.include_query_time,
        k=args.k,
        hops=args.hops,
        min_degree=args.min_deg,
        max_degree=args.max_deg,
        warmup=args.warmup,
        echo=lambda rec: print(rec.as_line(), flush=True),
    )
    failed = sum(1 for r in records if r.status != "ok")
    if failed:
        print(f"{failed} of {len(records)} cells failed", file=sys.stderr)
        return EXIT_DATA
    print(f"{len(records)} cells ok, records appended to {args.out}", file=sys.stderr)
    return EXIT_OK


# ---- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="assockit",
        description="Associative-array graph analytics over an embedded table store.",
    )
    sub = p.add_subparsers(dest="command", metavar="COMMAND", required=True)

    g = sub.add_parser("gen", help="generate a power-law edge list as a triple file")
    g.add_argument("--scale", type=int, required=True, help="graph has 2^SCALE vertices")
    g.add_argument("--degree", type=int, default=16, help="edge insertions per vertex")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output triple file, '-' for stdout")
    g.set_defaults(func=cmd_gen)

    i = sub.add_parser("ingest", help="load a triple file into stored graph tables")
    i.add_argument("file", help="input triple file, '-' for stdin")
    i.add_argument("--db", required=True, help="store directory")
    i.add_argument("--table", required=True, help="graph table name")
    i.add_argument("--schema", choices=_SCHEMA_CHOICES, default="adjacency")
    i.set_defaults(func=cmd_ingest)

    q = sub.add_parser("query", help="select table entries and print triples")
    q.add_argument("--db", required=True)
    q.add_argument("--table", required=True)
    q.add_argument("--row", default=":", help="row selector (default all)")
    q.add_argument("--col", default=":", help="column selector (default all)")
    q.add_argument("--value", default=None, help="keep only entries with this value")
    q.add_argument("--out", default="-", help="write triples here instead of stdout")
    q.set_defaults(func=cmd_query)

    a = sub.add_parser("algo", help="run bfs, jaccard, or ktruss on a stored graph")
    a.add_argument("name", choices=("bfs", "jaccard", "ktruss"))
    a.add_argument("--db", required=True)
    a.add_argument("--table", required=True)
    a.add_argument("--schema", choices=_SCHEMA_CHOICES, default="adjacency")
    a.add_argument("--mode", choices=("local", "server"), default="server")
    a.add_argument("--k", type=int, default=3, help="truss order")
    a.add_argument("--hops", type=int, default=3)
    a.add_argument("--min-deg", type=float, default=1.0)
    a.add_argument("--max-deg", type=float, default=float("inf"))
    a.add_argument(
        "--starts",
        default="5",
        help="comma-separated start vertices, or a bare count to sample (seeded)",
    )
    a.add_argument("--scale", type=int, default=0, help="record label")
    a.add_argument("--degree", type=int, default=0, help="record label")
    a.add_argument("--seed", type=int, default=0, help="record label and sampling seed")
    a.add_argument("--include-query-time", action="store_true")
    a.add_argument("--out", default=None, help="export result triples to this file")
    a.set_defaults(func=cmd_algo)

    b = sub.add_parser("bench", help="run the benchmark matrix, appending CSV records")
    b.add_argument("--db", required=True, help="workspace store (graphs reused across runs)")
    b.add_argument("--out", default="bench-results.csv", help="results CSV to append to")
    b.add_argument("--scales", default="8:12", help="'LO:HI' inclusive, or comma list")
    b.add_argument("--degree", type=int, default=16)
    b.add_argument("--seeds", type=int, default=3, help="seed count, runs seeds 0..N-1")
    b.add_argument("--algorithms", default="bfs,jaccard,ktruss")
    b.add_argument("--schemas", default="adjacency,incidence,single")
    b.add_argument("--modes", default="local,server")
    b.add_argument("--k", type=int, default=3)
    b.add_argument("--hops", type=int, default=3)
    b.add_argument("--min-deg", type=float, default=1.0)
    b.add_argument("--max-deg", type=float, default=100.0)
    b.add_argument("--warmup", type=int, default=1, help="discarded iterations per cell")
    b.add_argument("--include-query-time", action="store_true")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SelectorError as exc:
        return _diag(EXIT_DATA, f"selector error: {exc}")
    except (
        IncompatibleCollisionRule,
        InvalidCell,
        InvalidName,
        MissingTable,
        MixedValueVariant,
        ReservedKeyCollision,
        ScaleTooLarge,
        SchemaMismatch,
        SelfLoop,
        SinkCollision,
        WriterConflict,
    ) as exc:
        return _diag(EXIT_DATA, f"data error: {exc}")
    except ValueError as exc:
        return _diag(EXIT_USAGE, f"usage error: {exc}")
    except (CorruptManifest, IoFailure) as exc:
        return _diag(EXIT_IO, f"io error: {exc}")
    except OSError as exc:
        return _diag(EXIT_IO, f"io error: {exc}")


if __name__ == "__main__":
    sys.exit(main())
