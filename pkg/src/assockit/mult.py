"""Streaming matrix multiply whose operands and sink are store tables.

The engine merge-joins a scan of the left operand's transpose with a scan of
the right operand on their shared inner keys, emits partial products in
array chunks, and flushes bounded batches into the sink as pre-summed sorted
runs; the sink's sum combiner finishes the reduction at scan time. Neither
operand is ever materialized whole, so the tracked working set stays near
the batch size. When the left transpose is not stored (the usual case for
asymmetric operands), a temporary transpose table is built by re-sorting the
left operand in batches and is deleted afterwards.

Optional shaping keeps sinks small for graph work: `mask` restricts output
to the support of an existing table, `upper_only` keeps entries whose row
key precedes their column key.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import workingset
from .assoc import CONCAT_DELIMITER, MultiplyMode
from .errors import MixedValueVariant, SinkCollision
from .keys import encode_key, render_atom, sort_token
from .store import TableHandle, _compile_transforms

BATCH_LIMIT = 1 << 22
CHUNK_LIMIT = 1 << 20


@dataclass
class MultReport:
    """Job report; `as_kv_text` renders the line-oriented form."""

    partial_products: int
    entries_written: int
    batches: int
    seconds: float

    def as_kv_text(self) -> str:
        return (
            f"partial_products={self.partial_products} "
            f"entries_written={self.entries_written} "
            f"batches={self.batches} "
            f"seconds={self.seconds:.6f}"
        )


def _same_table(x: Optional[TableHandle], y: Optional[TableHandle]) -> bool:
    return (
        x is not None
        and y is not None
        and x.store._real == y.store._real
        and x.name == y.name
    )


def _grouped(scan):
    for key, group in itertools.groupby(scan, key=lambda t: t[0]):
        yield key, [(c, v) for _, c, v in group]


def _distinct_keys(handle: TableHandle, axis: int) -> list:
    """Sorted distinct row (axis 0) or col (axis 1) keys of a table."""
    import os

    from . import runio
    from .keys import decode_key

    if handle._buffer:
        handle.flush()
    keys: set = set()
    vectorized = True
    for run in handle._meta.runs:
        path = os.path.join(handle.store.directory, run)
        layout, _, _, val_kind = runio.read_header(path)
        if layout != runio.LAYOUT_FIXED or val_kind != runio.VAL_NUMBER:
            vectorized = False
            break
        rows, cols, _ = runio.read_fixed_arrays(path)
        mat = rows if axis == 0 else cols
        if mat.shape[0]:
            void = np.ascontiguousarray(mat).view(
                np.dtype((np.void, mat.shape[1]))
            ).reshape(-1)
            keys.update(decode_key(u.tobytes(), 0)[0] for u in np.unique(void))
    if not vectorized:
        keys = set()
        for r, c, _ in handle.scan():
            keys.add(r if axis == 0 else c)
    return sorted(keys, key=sort_token)


def _dir_bytes(keys: list) -> tuple[list[bytes], Optional[np.ndarray]]:
    """Encoded forms of a key directory, plus a byte matrix when widths agree."""
    enc = [encode_key(k) for k in keys]
    if enc and len({len(e) for e in enc}) == 1:
        w = len(enc[0])
        mat = np.frombuffer(b"".join(enc), dtype=np.uint8).reshape(len(enc), w)
        return enc, mat
    return enc, None


def build_transpose(src: TableHandle, dst: TableHandle, batch_limit: int = BATCH_LIMIT) -> int:
    """Write transpose(src) into dst by re-sorting in bounded batches."""
    dst.set_variant(src._meta.variant)
    total = 0
    batch: list[tuple[bytes, bytes, object]] = []

    def flush_batch():
        nonlocal total
        if not batch:
            return
        batch.sort(key=lambda t: (t[0], t[1]))
        from .keys import encode_value
        from .store import _as_fixed_batch

        fixed = _as_fixed_batch(batch) if dst._meta.variant == "number" else None
        if fixed is not None:
            total += dst.append_run_arrays(*fixed)
        else:
            total += dst.append_run_encoded(
                re + ce + b"\x00" + encode_value(v) for re, ce, v in batch
            )
        batch.clear()

    with workingset.owned(batch_limit):
        for r, c, v in src.scan():
            batch.append((encode_key(c), encode_key(r), v))
            if len(batch) >= batch_limit:
                flush_batch()
        flush_batch()
    return total


def table_mult(
    a: Optional[TableHandle],
    b: TableHandle,
    sink: TableHandle,
    mode: Optional[MultiplyMode] = None,
    *,
    a_transpose: Optional[TableHandle] = None,
    mask: Optional[TableHandle] = None,
    upper_only: bool = False,
    logical: bool = False,
    left_filters: Sequence = (),
    batch_limit: int = BATCH_LIMIT,
    chunk_limit: int = CHUNK_LIMIT,
) -> MultReport:
    """Multiply a by b into an empty sink table; returns the job report.

    `a_transpose`, when given, must hold transpose(a) (a symmetric table may
    pass itself); otherwise a temporary transpose is built and deleted.
    `logical` treats both operands as patterns, one unit per entry, so the
    product counts matching inner keys instead of summing weight products.
    `left_filters` are scan transforms evaluated against a's (row, col,
    value) entries before they join.
    """
    t0 = time.monotonic()
    if mode is None:
        mode = MultiplyMode.ARITH
    for other in (a, b, a_transpose, mask):
        if _same_table(sink, other):
            raise SinkCollision(f"sink {sink.name!r} collides with an operand")
    if not sink.is_empty():
        raise SinkCollision(f"sink {sink.name!r} is not empty")
    if a is None and a_transpose is None:
        raise ValueError("need the left operand or its transpose")

    want_combiner = "sum" if mode is MultiplyMode.ARITH else "concat"
    if sink._meta.combiner != want_combiner:
        sink._meta.combiner = want_combiner
        sink.store._write_manifest()

    temp_name = None
    if a_transpose is None:
        temp_name = f"tmp_xp_{sink.name}"
        if sink.store.has_table(temp_name):
            sink.store.delete_table(temp_name)
        a_transpose = sink.store.table(temp_name)
        build_transpose(a, a_transpose, batch_limit)
    try:
        if mode is MultiplyMode.ARITH:
            report = _mult_arith(
                a_transpose, b, sink, mask, upper_only, logical, left_filters,
                batch_limit, chunk_limit,
            )
        else:
            report = _mult_cat(a_transpose, b, sink, mode, left_filters, batch_limit)
    finally:
        if temp_name is not None:
            sink.store.delete_table(temp_name)
    report.seconds = time.monotonic() - t0
    return report


def _mult_arith(
    aT: TableHandle,
    b: TableHandle,
    sink: TableHandle,
    mask: Optional[TableHandle],
    upper_only: bool,
    logical: bool,
    left_filters: Sequence,
    batch_limit: int,
    chunk_limit: int,
) -> MultReport:
    a_logical = logical or aT._meta.variant == "text"
    b_logical = logical or b._meta.variant == "text"
    sink.set_variant("number")
    rows_dir = _distinct_keys(aT, 1)
    cols_dir = _distinct_keys(b, 1)
    rows_rank = {k: i for i, k in enumerate(rows_dir)}
    cols_rank = {k: i for i, k in enumerate(cols_dir)}
    rows_enc, rows_mat = _dir_bytes(rows_dir)
    cols_enc, cols_mat = _dir_bytes(cols_dir)
    nc = max(1, len(cols_dir))
    preds = _compile_transforms(list(left_filters))

    row_to_u = col_to_u = None
    if upper_only:
        universe = sorted(set(rows_dir) | set(cols_dir), key=sort_token)
        upos = {k: i for i, k in enumerate(universe)}
        row_to_u = np.fromiter((upos[k] for k in rows_dir), dtype=np.int64,
                               count=len(rows_dir))
        col_to_u = np.fromiter((upos[k] for k in cols_dir), dtype=np.int64,
                               count=len(cols_dir))

    mask_lin = None
    if mask is not None:
        pairs = []
        for r, c, _ in mask.scan():
            i = rows_rank.get(r)
            j = cols_rank.get(c)
            if i is not None and j is not None:
                pairs.append(i * nc + j)
        mask_lin = np.sort(np.asarray(pairs, dtype=np.int64))

    acc_r: list[np.ndarray] = []
    acc_c: list[np.ndarray] = []
    acc_v: list[np.ndarray] = []
    acc_n = 0
    products = 0
    written = 0
    batches = 0
    tracker = workingset.current()

    def flush():
        nonlocal acc_n, written, batches
        if not acc_n:
            return
        rr = np.concatenate(acc_r)
        cc = np.concatenate(acc_c)
        vv = np.concatenate(acc_v)
        acc_r.clear()
        acc_c.clear()
        acc_v.clear()
        lin = rr * nc + cc
        order = np.argsort(lin)
        lin_s = lin[order]
        vv_s = vv[order]
        starts = np.concatenate(([0], np.flatnonzero(np.diff(lin_s)) + 1))
        sums = np.add.reduceat(vv_s, starts)
        keep = sums != 0.0
        ulin = lin_s[starts][keep]
        sums = sums[keep]
        uri = ulin // nc
        uci = ulin % nc
        if rows_mat is not None and cols_mat is not None:
            written += sink.append_run_arrays(rows_mat[uri], cols_mat[uci], sums)
        else:
            from .keys import encode_value

            written += sink.append_run_encoded(
                rows_enc[i] + cols_enc[j] + b"\x00" + encode_value(float(s))
                for i, j, s in zip(uri.tolist(), uci.tolist(), sums.tolist())
            )
        batches += 1
        if tracker is not None:
            tracker.release(acc_n)
        acc_n = 0

    def emit(rr, cc, vv):
        nonlocal acc_n, products
        products += len(rr)
        if upper_only:
            m = row_to_u[rr] < col_to_u[cc]
            rr, cc, vv = rr[m], cc[m], vv[m]
        if mask_lin is not None and len(rr):
            lin = rr * nc + cc
            pos = np.searchsorted(mask_lin, lin)
            pos_c = np.minimum(pos, len(mask_lin) - 1)
            ok = (pos < len(mask_lin)) & (mask_lin[pos_c] == lin)
            rr, cc, vv = rr[ok], cc[ok], vv[ok]
        if not len(rr):
            return
        acc_r.append(rr)
        acc_c.append(cc)
        acc_v.append(vv)
        acc_n += len(rr)
        if tracker is not None:
            tracker.acquire(len(rr))
        if acc_n >= batch_limit:
            flush()

    fixed_charge = len(rows_dir) + len(cols_dir)
    if mask_lin is not None:
        fixed_charge += len(mask_lin)
    with workingset.owned(fixed_charge):
        ga = _grouped(_filtered_transpose_scan(aT, preds))
        gb = _grouped(b.scan())
        ka = next(ga, None)
        kb = next(gb, None)
        while ka is not None and kb is not None:
            ta = sort_token(ka[0])
            tb = sort_token(kb[0])
            if ta < tb:
                ka = next(ga, None)
                continue
            if tb < ta:
                kb = next(gb, None)
                continue
            ia = np.fromiter(
                (rows_rank[c] for c, _ in ka[1]), dtype=np.int64, count=len(ka[1])
            )
            jb = np.fromiter(
                (cols_rank[c] for c, _ in kb[1]), dtype=np.int64, count=len(kb[1])
            )
            wa = (
                np.ones(len(ka[1]))
                if a_logical
                else np.fromiter((v for _, v in ka[1]), dtype=np.float64, count=len(ka[1]))
            )
            wb = (
                np.ones(len(kb[1]))
                if b_logical
                else np.fromiter((v for _, v in kb[1]), dtype=np.float64, count=len(kb[1]))
            )
            step = max(1, chunk_limit // max(1, len(jb)))
            for s in range(0, len(ia), step):
                ia_c = ia[s : s + step]
                wa_c = wa[s : s + step]
                rr = np.repeat(ia_c, len(jb))
                cc = np.tile(jb, len(ia_c))
                vv = (wa_c[:, None] * wb[None, :]).ravel()
                emit(rr, cc, vv)
            ka = next(ga, None)
            kb = next(gb, None)
        flush()
    return MultReport(products, written, batches, 0.0)


def _filtered_transpose_scan(aT: TableHandle, preds):
    """Scan of the stored transpose, filters phrased against the original."""
    if not preds:
        yield from aT.scan()
        return
    for k, i, v in aT.scan():
        # the original operand's entry is (i, k, v)
        if all(p(i, k, v) for p in preds):
            yield k, i, v


def _mult_cat(
    aT: TableHandle,
    b: TableHandle,
    sink: TableHandle,
    mode: MultiplyMode,
    left_filters: Sequence,
    batch_limit: int,
) -> MultReport:
    if mode is MultiplyMode.CAT_VAL and aT._meta.variant != b._meta.variant:
        raise MixedValueVariant("value-concatenating multiply needs matching variants")
    sink.set_variant("text")
    preds = _compile_transforms(list(left_filters))
    pieces: list[tuple[bytes, bytes, str]] = []
    products = 0
    written = 0
    batches = 0

    def flush():
        nonlocal written, batches
        if not pieces:
            return
        grouped: dict[tuple[bytes, bytes], list[str]] = {}
        for re, ce, piece in pieces:
            grouped.setdefault((re, ce), []).append(piece)
        from .keys import encode_value

        written += sink.append_run_encoded(
            re + ce + b"\x00" + encode_value(CONCAT_DELIMITER.join(ps))
            for (re, ce), ps in sorted(grouped.items())
        )
        batches += 1
        pieces.clear()

    ga = _grouped(_filtered_transpose_scan(aT, preds))
    gb = _grouped(b.scan())
    ka = next(ga, None)
    kb = next(gb, None)
    while ka is not None and kb is not None:
        ta = sort_token(ka[0])
        tb = sort_token(kb[0])
        if ta < tb:
            ka = next(ga, None)
            continue
        if tb < ta:
            kb = next(gb, None)
            continue
        key_piece = render_atom(ka[0])
        for i, av in ka[1]:
            for j, bv in kb[1]:
                products += 1
                piece = (
                    key_piece
                    if mode is MultiplyMode.CAT_KEY
                    else f"{render_atom(av)}*{render_atom(bv)}"
                )
                pieces.append((encode_key(i), encode_key(j), piece))
        if len(pieces) >= batch_limit:
            flush()
        ka = next(ga, None)
        kb = next(gb, None)
    flush()
    return MultReport(products, written, batches, 0.0)
