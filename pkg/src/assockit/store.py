"""Embedded sorted key-value table store.

A store is a directory: a text manifest naming each table plus that table's
immutable sorted run files. Writes buffer in memory and become durable at
flush, which writes one new run (temp file, fsync, rename, directory fsync)
and then rewrites the manifest the same way, so a crash at any instant
leaves the store equal to the last completed flush.

Scans merge a snapshot of the run set entry-by-entry in (row, col) key
order. Duplicate keys resolve by the table's combiner: 'last' (newest run
wins, the default), 'sum' (numeric addition, used by multiply sinks), or
'concat' (text join in write order). Scan-time transforms filter the merged
stream inside the store layer: row/col selector ranges, value equality, and
degree-band filtering against a degree table; a multiply-join transform
terminates a transform stack and is executed as a streaming job by the
multiply engine.

One writer per table at a time, enforced with pid lock files; readers scan
immutable snapshots and need no lock.
"""

from __future__ import annotations

import heapq
import os
import re
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from . import runio, selectors, workingset
from .errors import (
    CorruptManifest,
    InvalidName,
    IoFailure,
    MixedValueVariant,
    SinkCollision,
    WriterConflict,
)
from .keys import (
    Key,
    Value,
    decode_key,
    decode_value,
    encode_key,
    encode_value,
    normalize_key,
    normalize_value,
)

MANIFEST = "MANIFEST"
MANIFEST_HEADER = "assockit-store v1"
NAME_RE = re.compile(r"^[A-Za-z0-9_-]+$")
VARIANTS = ("none", "number", "text")
COMBINERS = ("last", "sum", "concat")
CONCAT_DELIMITER = ";"
PUT_BUFFER_LIMIT = 1 << 18

_RUN_RE = re.compile(r"^(?P<table>[A-Za-z0-9_-]+)\.(?P<seq>\d{6})\.run$")

# (store path, table) -> id of the owning handle; in-process writer exclusion
_LIVE_LOCKS: dict[tuple[str, str], int] = {}


# ---- scan transforms -------------------------------------------------------------


@dataclass(frozen=True)
class RangeFilter:
    """Keep entries whose row and col keys match the given selectors."""

    rows: object = selectors.ALL
    cols: object = selectors.ALL


@dataclass(frozen=True)
class ValueFilter:
    """Keep entries whose value equals the given one exactly."""

    value: Value


@dataclass(frozen=True)
class DegreeFilter:
    """Keep entries whose row key's degree lies in [min_degree, max_degree].

    Degrees come from a degree table whose rows are keys and whose
    degree_column holds the numeric degree; keys absent there count as 0.
    """

    min_degree: float
    max_degree: float
    degree_table: "TableHandle"
    degree_column: str = "deg"


@dataclass(frozen=True)
class MultiplyJoin:
    """Terminal transform: multiply the scanned table by `other` into `sink`."""

    other: "TableHandle"
    sink: "TableHandle"
    mode: object = None  # assoc.MultiplyMode; None means Arith


Transform = object


def validate_spec(transforms: Sequence[Transform]) -> None:
    for i, t in enumerate(transforms):
        if isinstance(t, MultiplyJoin) and i != len(transforms) - 1:
            raise ValueError("a multiply-join transform must be last in the stack")
    if sum(isinstance(t, MultiplyJoin) for t in transforms) > 1:
        raise ValueError("at most one multiply-join per transform stack")


# ---- manifest --------------------------------------------------------------------


@dataclass
class TableMeta:
    name: str
    variant: str = "none"
    combiner: str = "last"
    next_seq: int = 1
    runs: list[str] = field(default_factory=list)


def _parse_manifest(text: str, path: str) -> dict[str, TableMeta]:
    lines = text.splitlines()
    if not lines or lines[0] != MANIFEST_HEADER:
        raise CorruptManifest(f"{path}: missing or unknown header")
    tables: dict[str, TableMeta] = {}
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 6 or parts[0] != "table":
            raise CorruptManifest(f"{path}:{lineno}: malformed table line")
        _, name, variant, combiner, seq, runs = parts
        if not NAME_RE.match(name) or name in tables:
            raise CorruptManifest(f"{path}:{lineno}: bad table name {name!r}")
        if variant not in VARIANTS or combiner not in COMBINERS:
            raise CorruptManifest(f"{path}:{lineno}: bad variant or combiner")
        if not seq.isdigit():
            raise CorruptManifest(f"{path}:{lineno}: bad sequence number")
        run_list = [r for r in runs.split(",") if r]
        for r in run_list:
            m = _RUN_RE.match(r)
            if not m or m.group("table") != name:
                raise CorruptManifest(f"{path}:{lineno}: bad run name {r!r}")
        tables[name] = TableMeta(name, variant, combiner, int(seq), run_list)
    return tables


def _format_manifest(tables: dict[str, TableMeta]) -> str:
    lines = [MANIFEST_HEADER]
    for meta in sorted(tables.values(), key=lambda m: m.name):
        lines.append(
            "\t".join(
                (
                    "table",
                    meta.name,
                    meta.variant,
                    meta.combiner,
                    str(meta.next_seq),
                    ",".join(meta.runs),
                )
            )
        )
    return "\n".join(lines) + "\n"


# ---- store -----------------------------------------------------------------------


class Store:
    """Directory-backed table store; the embedded stand-in for a KV database."""

    def __init__(self, directory):
        self.directory = os.fspath(directory)
        try:
            os.makedirs(self.directory, exist_ok=True)
        except OSError as e:
            raise IoFailure(f"cannot create store at {self.directory}: {e}") from e
        self._real = os.path.realpath(self.directory)
        self._handles: dict[str, TableHandle] = {}
        manifest_path = os.path.join(self.directory, MANIFEST)
        if os.path.exists(manifest_path):
            try:
                with open(manifest_path, "r", encoding="utf-8") as fp:
                    self.tables_meta = _parse_manifest(fp.read(), manifest_path)
            except OSError as e:
                raise IoFailure(f"cannot read manifest: {e}") from e
        else:
            self.tables_meta = {}
            self._write_manifest()
        self._clean_orphans()
        self._check_runs_present()

    # -- lifecycle --

    def _clean_orphans(self) -> None:
        referenced = {r for m in self.tables_meta.values() for r in m.runs}
        for fname in os.listdir(self.directory):
            path = os.path.join(self.directory, fname)
            if fname.endswith(".tmp"):
                _unlink_quiet(path)
            elif _RUN_RE.match(fname) and fname not in referenced:
                _unlink_quiet(path)
            elif fname.endswith(".lock"):
                pid = _read_lock_pid(path)
                if pid is not None and not _pid_alive(pid):
                    _unlink_quiet(path)

    def _check_runs_present(self) -> None:
        for meta in self.tables_meta.values():
            for r in meta.runs:
                if not os.path.exists(os.path.join(self.directory, r)):
                    raise CorruptManifest(f"run {r} listed for {meta.name} is missing")

    def _write_manifest(self) -> None:
        runio.atomic_write(
            self.directory,
            MANIFEST,
            _format_manifest(self.tables_meta).encode("utf-8"),
            "manifest",
        )

    def close(self) -> None:
        for h in list(self._handles.values()):
            h.close()
        self._handles.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    # -- tables --

    def table_names(self) -> list[str]:
        return sorted(self.tables_meta)

    def table(self, name: str, combiner: str = "last") -> "TableHandle":
        """Bind a table, creating it if absent (combiner applies on creation)."""
        if not isinstance(name, str) or not NAME_RE.match(name):
            raise InvalidName(f"table name {name!r} must match [A-Za-z0-9_-]+")
        if combiner not in COMBINERS:
            raise ValueError(f"combiner must be one of {COMBINERS}")
        if name not in self.tables_meta:
            self.tables_meta[name] = TableMeta(name, combiner=combiner)
            self._write_manifest()
        if name not in self._handles:
            self._handles[name] = TableHandle(self, name)
        return self._handles[name]

    def has_table(self, name: str) -> bool:
        return name in self.tables_meta

    def delete_table(self, name: str) -> None:
        if name not in self.tables_meta:
            return
        handle = self._handles.pop(name, None)
        if handle is not None:
            handle.close()
        else:
            _require_writable(self._real, self.directory, name, owner=None)
        meta = self.tables_meta.pop(name)
        self._write_manifest()
        for r in meta.runs:
            _unlink_quiet(os.path.join(self.directory, r))
        _unlink_quiet(os.path.join(self.directory, name + ".lock"))


class TableHandle:
    """One client's view of a named table; writes buffer here until flush."""

    def __init__(self, store: Store, name: str):
        self.store = store
        self.name = name
        self._buffer: dict[tuple[Key, Key], Value] = {}
        self._locked = False
        self._closed = False

    def __repr__(self):
        return f"TableHandle({self.name!r}, buffered={len(self._buffer)})"

    @property
    def _meta(self) -> TableMeta:
        try:
            return self.store.tables_meta[self.name]
        except KeyError:
            raise InvalidName(f"table {self.name!r} no longer exists") from None

    # -- writing --

    def _acquire_lock(self) -> None:
        if self._locked:
            return
        _acquire_write_lock(self.store._real, self.store.directory, self.name, id(self))
        self._locked = True

    def _release_lock(self) -> None:
        if not self._locked:
            return
        _LIVE_LOCKS.pop((self.store._real, self.name), None)
        _unlink_quiet(os.path.join(self.store.directory, self.name + ".lock"))
        self._locked = False

    def close(self) -> None:
        if self._closed:
            return
        self._release_lock()
        self._closed = True
        self.store._handles.pop(self.name, None)

    def put(self, triples: Iterable) -> tuple[int, float]:
        """Buffer triples; returns (count, seconds). Last write per key wins.

        Zero and empty-text values are dropped, matching associative-array
        semantics. Buffers auto-flush past a size threshold.
        """
        t0 = time.monotonic()
        self._acquire_lock()
        meta = self._meta
        variant = meta.variant
        n = 0
        for r, c, v in triples:
            r = normalize_key(r)
            c = normalize_key(c)
            v = normalize_value(v)
            kind = "text" if isinstance(v, str) else "number"
            if variant == "none":
                variant = kind
            elif variant != kind:
                raise MixedValueVariant(
                    f"table {self.name!r} holds {variant} values, got {kind}"
                )
            n += 1
            if v == 0.0 and not isinstance(v, str):
                self._buffer.pop((r, c), None)
                continue
            if v == "":
                self._buffer.pop((r, c), None)
                continue
            self._buffer[(r, c)] = v
            if len(self._buffer) >= PUT_BUFFER_LIMIT:
                meta.variant = variant
                self.flush()
                variant = self._meta.variant
        meta.variant = variant
        return n, time.monotonic() - t0

    def flush(self) -> None:
        """Write buffered entries as one run and commit it; idempotent."""
        if not self._buffer:
            return
        self._acquire_lock()
        meta = self._meta
        items = sorted(
            ((encode_key(r), encode_key(c), v) for (r, c), v in self._buffer.items())
        )
        run_name = f"{self.name}.{meta.next_seq:06d}.run"
        fixed = _as_fixed_batch(items) if meta.variant == "number" else None
        if fixed is not None:
            row_mat, col_mat, vals = fixed
            runio.write_fixed_run(
                self.store.directory, run_name, runio.pack_fixed_entries(row_mat, col_mat, vals),
                row_mat.shape[1], col_mat.shape[1],
            )
        else:
            runio.write_run(
                self.store.directory,
                run_name,
                (re + ce + b"\x00" + encode_value(v) for re, ce, v in items),
            )
        meta.next_seq += 1
        meta.runs.append(run_name)
        self.store._write_manifest()
        self._buffer.clear()

    def append_run_arrays(
        self, row_mat: np.ndarray, col_mat: np.ndarray, vals: np.ndarray
    ) -> int:
        """Commit one pre-sorted fixed-layout numeric batch as a run.

        Used by the multiply engine; rows/cols are encoded-key byte matrices
        already in ascending (row, col) order with no duplicate keys.
        """
        if row_mat.shape[0] == 0:
            return 0
        self._acquire_lock()
        meta = self._meta
        if meta.variant == "text":
            raise MixedValueVariant(f"table {self.name!r} holds text values")
        meta.variant = "number"
        entry_mat = runio.pack_fixed_entries(row_mat, col_mat, vals)
        run_name = f"{self.name}.{meta.next_seq:06d}.run"
        runio.write_fixed_run(
            self.store.directory, run_name, entry_mat, row_mat.shape[1], col_mat.shape[1]
        )
        meta.next_seq += 1
        meta.runs.append(run_name)
        self.store._write_manifest()
        return int(entry_mat.shape[0])

    def append_run_encoded(self, encoded_entries: Iterable[bytes]) -> int:
        """Commit pre-encoded, pre-sorted entries as one run (text-valued jobs)."""
        self._acquire_lock()
        meta = self._meta
        run_name = f"{self.name}.{meta.next_seq:06d}.run"
        count = runio.write_run(self.store.directory, run_name, encoded_entries)
        if count == 0:
            _unlink_quiet(os.path.join(self.store.directory, run_name))
            return 0
        meta.next_seq += 1
        meta.runs.append(run_name)
        self.store._write_manifest()
        return count

    def set_variant(self, variant: str) -> None:
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        cur = self._meta.variant
        if cur != "none" and cur != variant:
            raise MixedValueVariant(f"table {self.name!r} already holds {cur} values")
        self._meta.variant = variant

    def delete(self) -> None:
        self.store.delete_table(self.name)

    # -- reading --

    def is_empty(self) -> bool:
        return not self._meta.runs and not self._buffer

    def entry_count(self) -> int:
        n = 0
        for _ in self.scan():
            n += 1
        return n

    def scan(self, transforms: Sequence[Transform] = ()) -> Iterator[tuple]:
        """Merged (row, col, value) triples in key order, transforms applied.

        A handle scanning its own unflushed writes flushes them first; the
        run set is snapshotted at call time.
        """
        validate_spec(transforms)
        if any(isinstance(t, MultiplyJoin) for t in transforms):
            raise ValueError("multiply-join transforms run via execute(), not scan()")
        if self._buffer:
            self.flush()
        meta = self._meta
        runs = list(meta.runs)
        combiner = meta.combiner
        preds = _compile_transforms(transforms)
        for row, col, val in _merge_runs(self.store.directory, runs, combiner):
            if all(p(row, col, val) for p in preds):
                yield row, col, val

    def to_assoc(self):
        """Materialize the whole table as an in-memory associative array."""
        from .assoc import Assoc

        rk = self.scan_ranked()
        numeric = None if rk.nnz == 0 else isinstance(rk.vals, np.ndarray)
        return Assoc._from_arrays(
            rk.row_keys, rk.col_keys, rk.ri, rk.ci, rk.vals, numeric, sort=False
        )

    def scan_ranked(self) -> "RankedTable":
        """Whole-table scan as rank-indexed arrays (fast path when possible)."""
        if self._buffer:
            self.flush()
        meta = self._meta
        runs = list(meta.runs)
        fast = _try_scan_ranked_fast(self.store.directory, runs, meta.combiner)
        if fast is not None:
            return fast
        rows, cols, vals = [], [], []
        for r, c, v in self.scan():
            rows.append(r)
            cols.append(c)
            vals.append(v)
        return _rank_triples(rows, cols, vals)

    def execute(self, transforms: Sequence[Transform]):
        """Run a transform stack ending in a multiply-join; returns its report."""
        validate_spec(transforms)
        if not transforms or not isinstance(transforms[-1], MultiplyJoin):
            raise ValueError("execute() needs a multiply-join as the last transform")
        join = transforms[-1]
        from . import mult

        return mult.table_mult(
            self,
            join.other,
            join.sink,
            mode=join.mode,
            left_filters=transforms[:-1],
        )


@dataclass
class RankedTable:
    """Table contents as sorted key directories plus integer index arrays."""

    row_keys: tuple
    col_keys: tuple
    ri: np.ndarray
    ci: np.ndarray
    vals: np.ndarray

    @property
    def nnz(self) -> int:
        return int(len(self.vals))


# ---- merge scan machinery ---------------------------------------------------------


def _run_stream(directory: str, run_name: str, seq: int):
    path = os.path.join(directory, run_name)
    for row_b, col_b, flag, val_b in runio.read_encoded(path):
        yield row_b + col_b, -seq, row_b, flag, val_b


def _run_seq(run_name: str) -> int:
    m = _RUN_RE.match(run_name)
    return int(m.group("seq")) if m else 0


def _merge_runs(directory: str, runs: list[str], combiner: str) -> Iterator[tuple]:
    if not runs:
        return
    streams = [_run_stream(directory, r, _run_seq(r)) for r in runs]
    merged = heapq.merge(*streams) if len(streams) > 1 else streams[0]
    group_key: Optional[bytes] = None
    group: list[tuple] = []
    for item in merged:
        if item[0] != group_key:
            if group:
                out = _combine(group, combiner)
                if out is not None:
                    yield out
            group_key = item[0]
            group = [item]
        else:
            group.append(item)
    if group:
        out = _combine(group, combiner)
        if out is not None:
            yield out


def _combine(group: list[tuple], combiner: str):
    # group items: (key bytes, -seq, row bytes, flag, value bytes), newest first
    kb, _, row_b, flag, val_b = group[0]
    row, pos = decode_key(kb, 0)
    col, _ = decode_key(kb, pos)
    if combiner == "last":
        if flag == runio.FLAG_TOMBSTONE:
            return None
        return row, col, decode_value(val_b, 0)[0]
    live = [g for g in reversed(group) if g[3] != runio.FLAG_TOMBSTONE]
    if not live:
        return None
    if combiner == "sum":
        total = 0.0
        for g in live:
            total += decode_value(g[4], 0)[0]
        if total == 0.0:
            return None
        return row, col, total
    pieces = [decode_value(g[4], 0)[0] for g in live]
    return row, col, CONCAT_DELIMITER.join(pieces)


def _compile_transforms(transforms: Sequence[Transform]):
    preds = []
    for t in transforms:
        if isinstance(t, RangeFilter):
            rp = selectors.key_predicate(selectors.parse_selector(t.rows))
            cp = selectors.key_predicate(selectors.parse_selector(t.cols))
            preds.append(lambda r, c, v, rp=rp, cp=cp: rp(r) and cp(c))
        elif isinstance(t, ValueFilter):
            want = normalize_value(t.value)
            if isinstance(want, str):
                preds.append(lambda r, c, v, w=want: isinstance(v, str) and v == w)
            else:
                preds.append(
                    lambda r, c, v, w=want: not isinstance(v, str) and v == w
                )
        elif isinstance(t, DegreeFilter):
            degs = _load_degrees(t.degree_table, t.degree_column)
            lo, hi = float(t.min_degree), float(t.max_degree)
            preds.append(
                lambda r, c, v, d=degs, lo=lo, hi=hi: lo <= d.get(r, 0.0) <= hi
            )
        else:
            raise ValueError(f"unknown transform {t!r}")
    return preds


def _load_degrees(degree_table: TableHandle, column: str) -> dict:
    out = {}
    for r, c, v in degree_table.scan():
        if c == column:
            out[r] = v
    return out


# ---- ranked fast path ---------------------------------------------------------------


def _try_scan_ranked_fast(directory: str, runs: list[str], combiner: str):
    """Vectorized whole-table scan when every run is fixed-layout numeric."""
    if not runs or combiner == "concat":
        return None
    widths = None
    for r in runs:
        layout, row_w, col_w, val_kind = runio.read_header(os.path.join(directory, r))
        if layout != runio.LAYOUT_FIXED or val_kind != runio.VAL_NUMBER:
            return None
        if widths is None:
            widths = (row_w, col_w)
        elif widths != (row_w, col_w):
            return None
    row_parts, col_parts, val_parts, seq_parts = [], [], [], []
    for r in runs:
        rows, cols, vals = runio.read_fixed_arrays(os.path.join(directory, r))
        row_parts.append(rows)
        col_parts.append(cols)
        val_parts.append(vals)
        seq_parts.append(np.full(len(vals), _run_seq(r), dtype=np.int64))
    row_mat = np.concatenate(row_parts)
    col_mat = np.concatenate(col_parts)
    vals = np.concatenate(val_parts)
    seqs = np.concatenate(seq_parts)
    if len(vals) == 0:
        return RankedTable((), (), np.empty(0, np.int64), np.empty(0, np.int64), vals)
    with workingset.owned(len(vals)):
        row_keys, ri = _rank_key_bytes(row_mat)
        col_keys, ci = _rank_key_bytes(col_mat)
        lin = ri.astype(np.int64) * len(col_keys) + ci
        order = np.lexsort((seqs, lin))
        lin_s = lin[order]
        vals_s = vals[order]
        boundaries = np.flatnonzero(np.diff(lin_s)) + 1
        starts = np.concatenate(([0], boundaries))
        ends = np.concatenate((boundaries, [len(lin_s)]))
        if combiner == "sum":
            sums = np.add.reduceat(vals_s, starts)
            keep = sums != 0.0
            lin_u = lin_s[starts][keep]
            out_vals = sums[keep]
        else:  # last write wins: the highest sequence number in each group
            lin_u = lin_s[starts]
            out_vals = vals_s[ends - 1]
        out_ri = lin_u // len(col_keys)
        out_ci = lin_u % len(col_keys)
    return _prune_ranked(row_keys, col_keys, out_ri, out_ci, out_vals)


def _rank_key_bytes(mat: np.ndarray):
    """-> (decoded sorted unique keys, rank per entry)."""
    void = np.ascontiguousarray(mat).view(
        np.dtype((np.void, mat.shape[1]))
    ).reshape(-1)
    uniq, inverse = np.unique(void, return_inverse=True)
    keys = tuple(decode_key(u.tobytes(), 0)[0] for u in uniq)
    return keys, inverse.astype(np.int64)


def _prune_ranked(row_keys, col_keys, ri, ci, vals) -> RankedTable:
    used_r = np.unique(ri)
    used_c = np.unique(ci)
    if len(used_r) != len(row_keys):
        ri = np.searchsorted(used_r, ri)
        row_keys = tuple(row_keys[i] for i in used_r.tolist())
    if len(used_c) != len(col_keys):
        ci = np.searchsorted(used_c, ci)
        col_keys = tuple(col_keys[i] for i in used_c.tolist())
    return RankedTable(row_keys, col_keys, ri.astype(np.int64), ci.astype(np.int64), vals)


def _rank_triples(rows: list, cols: list, vals: list) -> RankedTable:
    from .keys import sort_token

    row_keys = tuple(sorted(set(rows), key=sort_token))
    col_keys = tuple(sorted(set(cols), key=sort_token))
    rmap = {k: i for i, k in enumerate(row_keys)}
    cmap = {k: i for i, k in enumerate(col_keys)}
    ri = np.fromiter((rmap[r] for r in rows), dtype=np.int64, count=len(rows))
    ci = np.fromiter((cmap[c] for c in cols), dtype=np.int64, count=len(cols))
    if all(not isinstance(v, str) for v in vals):
        arr = np.asarray(vals, dtype=np.float64)
    else:
        arr = vals
    return RankedTable(row_keys, col_keys, ri, ci, arr)


def _as_fixed_batch(items: list):
    """(row matrix, col matrix, values) when all encoded keys share widths."""
    if not items:
        return None
    row_w = len(items[0][0])
    col_w = len(items[0][1])
    if any(len(re) != row_w or len(ce) != col_w for re, ce, _ in items):
        return None
    n = len(items)
    row_mat = np.frombuffer(b"".join(re for re, _, _ in items), dtype=np.uint8).reshape(n, row_w)
    col_mat = np.frombuffer(b"".join(ce for _, ce, _ in items), dtype=np.uint8).reshape(n, col_w)
    vals = np.fromiter((v for _, _, v in items), dtype=np.float64, count=n)
    return row_mat, col_mat, vals


# ---- locks ---------------------------------------------------------------------------


def _acquire_write_lock(real: str, directory: str, name: str, owner_id: int) -> None:
    key = (real, name)
    if key in _LIVE_LOCKS:
        if _LIVE_LOCKS[key] != owner_id:
            raise WriterConflict(f"table {name!r} already has a live writer")
        return
    path = os.path.join(directory, name + ".lock")
    pid = os.getpid()
    while True:
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            other = _read_lock_pid(path)
            if other is not None and other != pid and _pid_alive(other):
                raise WriterConflict(
                    f"table {name!r} is locked by live process {other}"
                ) from None
            # stale lock (dead process) or our own orphan: reclaim
            _unlink_quiet(path)
            continue
        except OSError as e:
            raise IoFailure(f"cannot create lock for {name!r}: {e}") from e
        try:
            os.write(fd, str(pid).encode("ascii"))
        finally:
            os.close(fd)
        _LIVE_LOCKS[key] = owner_id
        return


def _require_writable(real: str, directory: str, name: str, owner) -> None:
    key = (real, name)
    if key in _LIVE_LOCKS:
        raise WriterConflict(f"table {name!r} has a live writer")
    path = os.path.join(directory, name + ".lock")
    pid = _read_lock_pid(path)
    if pid is not None and pid != os.getpid() and _pid_alive(pid):
        raise WriterConflict(f"table {name!r} is locked by live process {pid}")


def _read_lock_pid(path: str) -> Optional[int]:
    try:
        with open(path, "r", encoding="ascii") as fp:
            return int(fp.read().strip() or "0")
    except (OSError, ValueError):
        return None


def _pid_alive(pid: int) -> bool:
    if pid <= 0:
        return False
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


def _unlink_quiet(path: str) -> None:
    try:
        os.unlink(path)
    except OSError:
        pass


def _reset_process_locks() -> None:
    """Forget in-process writer locks; crash-simulation harness support."""
    _LIVE_LOCKS.clear()
