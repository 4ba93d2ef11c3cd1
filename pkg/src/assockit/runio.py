"""Immutable sorted run files.

A run is the unit of durability: a header, then length-prefixed CRC32-guarded
blocks of concatenated entries. Each entry is

    encoded row key | encoded col key | flag byte | encoded value

with flag 0x00 for a live value and 0x01 for a tombstone (no value bytes).
Key encoding is order-preserving, so byte order of (row, col) equals key
order and runs can be merge-scanned without decoding.

Runs are written to a temporary name, fsynced, then renamed into place and
the directory fsynced; a reader never sees a partial run under its final
name. Fixed-layout runs (uniform key widths, numeric values) record their
entry stride in the header so scans can decode them with array operations.

`crash_hook`, when set, is invoked with a label at every durability boundary;
the kill-point harness raises from it to simulate dying at that instant.
"""

from __future__ import annotations

import os
import struct
import zlib
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from .errors import CorruptRun, IoFailure
from .keys import decode_key, decode_value, encode_key, encode_value

MAGIC = b"AKRN1\x00"
HEADER = struct.Struct("<6sBHHB")  # magic, layout, row width, col width, value kind
BLOCK = struct.Struct("<II")  # payload length, crc32
BLOCK_TARGET = 64 * 1024

LAYOUT_GENERIC = 0
LAYOUT_FIXED = 1
VAL_NUMBER = 1
VAL_TEXT = 2
VAL_MIXED = 0

FLAG_LIVE = 0
FLAG_TOMBSTONE = 1

crash_hook: Optional[Callable[[str], None]] = None


def _crash(point: str) -> None:
    if crash_hook is not None:
        crash_hook(point)


def encode_entry(row, col, val, flag: int = FLAG_LIVE) -> bytes:
    head = encode_key(row) + encode_key(col) + bytes([flag])
    if flag == FLAG_TOMBSTONE:
        return head
    return head + encode_value(val)


def decode_entry(buf: bytes, pos: int):
    """-> (row, col, flag, value or None, next position)."""
    row, pos = decode_key(buf, pos)
    col, pos = decode_key(buf, pos)
    flag = buf[pos]
    pos += 1
    if flag == FLAG_TOMBSTONE:
        return row, col, flag, None, pos
    val, pos = decode_value(buf, pos)
    return row, col, flag, val, pos


def fsync_dir(path: str) -> None:
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


def atomic_write(directory: str, name: str, data: bytes, label: str) -> None:
    """Write a file so that it appears complete or not at all."""
    tmp = os.path.join(directory, name + ".tmp")
    final = os.path.join(directory, name)
    try:
        with open(tmp, "wb") as fp:
            fp.write(data)
            _crash(f"{label}.tmp_written")
            fp.flush()
            os.fsync(fp.fileno())
        _crash(f"{label}.tmp_synced")
        os.rename(tmp, final)
        _crash(f"{label}.renamed")
        fsync_dir(directory)
        _crash(f"{label}.dir_synced")
    except OSError as e:
        raise IoFailure(f"cannot write {final}: {e}") from e


def write_run(
    directory: str,
    name: str,
    entries: Iterable[bytes],
    layout: int = LAYOUT_GENERIC,
    row_width: int = 0,
    col_width: int = 0,
    val_kind: int = VAL_MIXED,
) -> int:
    """Write encoded entries (already in key order) as a run file; returns count."""
    tmp = os.path.join(directory, name + ".tmp")
    final = os.path.join(directory, name)
    count = 0
    try:
        with open(tmp, "wb") as fp:
            fp.write(HEADER.pack(MAGIC, layout, row_width, col_width, val_kind))
            block: list[bytes] = []
            size = 0
            for enc in entries:
                block.append(enc)
                size += len(enc)
                count += 1
                if size >= BLOCK_TARGET:
                    _write_block(fp, block)
                    _crash("run.block_written")
                    block, size = [], 0
            if block:
                _write_block(fp, block)
            _crash("run.tmp_written")
            fp.flush()
            os.fsync(fp.fileno())
        _crash("run.tmp_synced")
        os.rename(tmp, final)
        _crash("run.renamed")
        fsync_dir(directory)
        _crash("run.dir_synced")
    except OSError as e:
        raise IoFailure(f"cannot write run {final}: {e}") from e
    return count


def _write_block(fp, parts: list[bytes]) -> None:
    payload = b"".join(parts)
    fp.write(BLOCK.pack(len(payload), zlib.crc32(payload)))
    fp.write(payload)


def read_header(path: str) -> tuple[int, int, int, int]:
    """-> (layout, row width, col width, value kind)."""
    try:
        with open(path, "rb") as fp:
            head = fp.read(HEADER.size)
    except OSError as e:
        raise IoFailure(f"cannot read run {path}: {e}") from e
    if len(head) != HEADER.size:
        raise CorruptRun(f"{path}: truncated header")
    magic, layout, row_w, col_w, val_kind = HEADER.unpack(head)
    if magic != MAGIC:
        raise CorruptRun(f"{path}: bad magic")
    return layout, row_w, col_w, val_kind


def read_blocks(path: str) -> Iterator[bytes]:
    """Yield verified block payloads in file order."""
    try:
        with open(path, "rb") as fp:
            head = fp.read(HEADER.size)
            if len(head) != HEADER.size:
                raise CorruptRun(f"{path}: truncated header")
            magic = HEADER.unpack(head)[0]
            if magic != MAGIC:
                raise CorruptRun(f"{path}: bad magic")
            while True:
                frame = fp.read(BLOCK.size)
                if not frame:
                    return
                if len(frame) != BLOCK.size:
                    raise CorruptRun(f"{path}: torn block frame")
                length, crc = BLOCK.unpack(frame)
                payload = fp.read(length)
                if len(payload) != length:
                    raise CorruptRun(f"{path}: torn block payload")
                if zlib.crc32(payload) != crc:
                    raise CorruptRun(f"{path}: block checksum mismatch")
                yield payload
    except OSError as e:
        raise IoFailure(f"cannot read run {path}: {e}") from e


def read_encoded(path: str) -> Iterator[tuple[bytes, bytes, int, bytes]]:
    """Yield (row key bytes, col key bytes, flag, value bytes) without decoding keys."""
    for payload in read_blocks(path):
        pos = 0
        n = len(payload)
        while pos < n:
            try:
                rp = _skip_key(payload, pos)
                cp = _skip_key(payload, rp)
                flag = payload[cp]
                vp = cp + 1
                if flag == FLAG_TOMBSTONE:
                    vend = vp
                else:
                    vend = _skip_value(payload, vp)
            except (IndexError, struct.error, ValueError) as e:
                raise CorruptRun(f"{path}: malformed entry: {e}") from e
            yield payload[pos:rp], payload[rp:cp], flag, payload[vp:vend]
            pos = vend


def _skip_key(buf: bytes, pos: int) -> int:
    tag = buf[pos]
    if tag == 0x01:
        return pos + 9
    if tag == 0x02:
        i = pos + 1
        while True:
            i = buf.index(b"\x00", i)
            if i + 1 < len(buf) and buf[i + 1] == 0xFF:
                i += 2
                continue
            return i + 1
    raise CorruptRun(f"unknown key tag {tag:#x}")


def _skip_value(buf: bytes, pos: int) -> int:
    tag = buf[pos]
    if tag == 0x01:
        return pos + 9
    if tag == 0x02:
        (length,) = struct.unpack_from(">I", buf, pos + 1)
        return pos + 5 + length
    raise CorruptRun(f"unknown value tag {tag:#x}")


def read_entries(path: str) -> Iterator[tuple]:
    """Yield decoded (row, col, flag, value) in key order."""
    for payload in read_blocks(path):
        pos = 0
        n = len(payload)
        while pos < n:
            try:
                row, col, flag, val, pos = decode_entry(payload, pos)
            except (IndexError, struct.error, ValueError) as e:
                raise CorruptRun(f"{path}: malformed entry: {e}") from e
            yield row, col, flag, val


def read_fixed_arrays(path: str):
    """Fast path for fixed-layout runs.

    -> (row bytes matrix, col bytes matrix, float64 values) where the key
    matrices are uint8 arrays of shape (n, width).
    """
    layout, row_w, col_w, val_kind = read_header(path)
    if layout != LAYOUT_FIXED or val_kind != VAL_NUMBER:
        raise CorruptRun(f"{path}: not a fixed-layout numeric run")
    stride = row_w + col_w + 1 + 9
    chunks = []
    for payload in read_blocks(path):
        if len(payload) % stride:
            raise CorruptRun(f"{path}: block size not a stride multiple")
        chunks.append(np.frombuffer(payload, dtype=np.uint8).reshape(-1, stride))
    if not chunks:
        mat = np.zeros((0, stride), dtype=np.uint8)
    else:
        mat = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    rows = mat[:, :row_w]
    cols = mat[:, row_w : row_w + col_w]
    if mat.shape[0] and (mat[:, row_w + col_w] != FLAG_LIVE).any():
        raise CorruptRun(f"{path}: tombstone inside fixed-layout run")
    if mat.shape[0] and (mat[:, row_w + col_w + 1] != 0x01).any():
        raise CorruptRun(f"{path}: non-numeric value inside fixed-layout run")
    vals = (
        mat[:, row_w + col_w + 2 :]
        .copy()
        .view(">f8")
        .reshape(-1)
        .astype(np.float64)
    )
    return rows, cols, vals


def pack_fixed_entries(
    row_mat: np.ndarray, col_mat: np.ndarray, vals: np.ndarray
) -> np.ndarray:
    """Inverse of read_fixed_arrays: (n, stride) uint8 entry matrix."""
    n, row_w = row_mat.shape
    col_w = col_mat.shape[1]
    stride = row_w + col_w + 1 + 9
    out = np.empty((n, stride), dtype=np.uint8)
    out[:, :row_w] = row_mat
    out[:, row_w : row_w + col_w] = col_mat
    out[:, row_w + col_w] = FLAG_LIVE
    out[:, row_w + col_w + 1] = 0x01
    out[:, row_w + col_w + 2 :] = (
        np.ascontiguousarray(vals, dtype=">f8").view(np.uint8).reshape(n, 8)
    )
    return out


def fixed_run_blocks(entry_mat: np.ndarray, block_target: int = BLOCK_TARGET):
    """Split an entry matrix into run-file payload blocks."""
    stride = entry_mat.shape[1]
    per_block = max(1, block_target // stride)
    for start in range(0, entry_mat.shape[0], per_block):
        yield entry_mat[start : start + per_block].tobytes()


def write_fixed_run(
    directory: str, name: str, entry_mat: np.ndarray, row_w: int, col_w: int
) -> int:
    """Write a pre-packed fixed-layout numeric run; returns entry count."""
    tmp = os.path.join(directory, name + ".tmp")
    final = os.path.join(directory, name)
    try:
        with open(tmp, "wb") as fp:
            fp.write(HEADER.pack(MAGIC, LAYOUT_FIXED, row_w, col_w, VAL_NUMBER))
            for payload in fixed_run_blocks(entry_mat):
                fp.write(BLOCK.pack(len(payload), zlib.crc32(payload)))
                fp.write(payload)
                _crash("run.block_written")
            _crash("run.tmp_written")
            fp.flush()
            os.fsync(fp.fileno())
        _crash("run.tmp_synced")
        os.rename(tmp, final)
        _crash("run.renamed")
        fsync_dir(directory)
        _crash("run.dir_synced")
    except OSError as e:
        raise IoFailure(f"cannot write run {final}: {e}") from e
    return int(entry_mat.shape[0])
