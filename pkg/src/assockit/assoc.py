"""Sparse associative arrays and their algebra.

An Assoc is an immutable two-dimensional sparse map from (row key, column
key) to a value. Keys are text or numbers under one total order (numbers
first); values within one array are homogeneously numeric or text. The
algebra (+, -, &, |, and three matrix-multiply flavors) is closed over
associative arrays, so analytics compose without leaving the type.

Internally entries live in parallel numpy index arrays sorted
lexicographically by (row index, col index); numeric kernels ride on
scipy.sparse. Text-valued paths use plain Python loops since they only occur
at interactive scale.
"""

from __future__ import annotations

from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse as _sp

from . import workingset
from .errors import IncompatibleCollisionRule, MixedValueVariant
from .keys import Key, Value, normalize_key, normalize_value, render_atom, sort_token
from .selectors import match_keys

Triple = tuple[Key, Key, Value]

CONCAT_DELIMITER = ";"


class CollisionRule(Enum):
    """How duplicate (row, col) triples merge during construction."""

    SUM = "sum"
    FIRST = "first"
    LAST = "last"
    CONCAT = "concat"


class MultiplyMode(Enum):
    """Matrix-multiply flavors sharing one join structure.

    ARITH is plus-times. CAT_KEY records, per output cell, the joining inner
    keys as text. CAT_VAL records the joined value pairs as text. The two CAT
    modes keep provenance that plain arithmetic throws away.
    """

    ARITH = "arith"
    CAT_KEY = "catkey"
    CAT_VAL = "catval"


_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_F = np.empty(0, dtype=np.float64)


def _is_zero(v) -> bool:
    return v == 0.0 if isinstance(v, float) else v == ""


class Assoc:
    __slots__ = (
        "_row_keys",
        "_col_keys",
        "_ri",
        "_ci",
        "_vals",
        "_numeric",
        "_csr_cache",
        "_rowmap_cache",
        "_colmap_cache",
        "_lin_cache",
        "__weakref__",
    )

    def __init__(self, triples: Iterable[Sequence] = (), rule: CollisionRule | None = None):
        """Build from (row, col, value) triples.

        Duplicate coordinates merge under `rule`; the default is SUM for
        numeric values and LAST for text. Exact-zero / empty-text results are
        dropped, and key lists are exactly the keys of surviving entries.
        """
        folded: dict[tuple, Value] = {}
        numeric: bool | None = None
        norm: list[tuple[Key, Key, Value]] = []
        for r, c, v in triples:
            r = normalize_key(r)
            c = normalize_key(c)
            v = normalize_value(v)
            isnum = not isinstance(v, str)
            if numeric is None:
                numeric = isnum
            elif numeric != isnum:
                raise MixedValueVariant("numeric and text values in one array")
            norm.append((r, c, v))
        if rule is None:
            rule = CollisionRule.SUM if numeric else CollisionRule.LAST
        if rule is CollisionRule.SUM and numeric is False:
            raise IncompatibleCollisionRule("SUM collision rule needs numeric values")
        if rule is CollisionRule.CONCAT and numeric is True:
            raise IncompatibleCollisionRule("CONCAT collision rule needs text values")
        for r, c, v in norm:
            coord = (sort_token(r), sort_token(c))
            if coord not in folded:
                folded[coord] = v
            elif rule is CollisionRule.SUM:
                folded[coord] += v
            elif rule is CollisionRule.LAST:
                folded[coord] = v
            elif rule is CollisionRule.CONCAT:
                folded[coord] = folded[coord] + CONCAT_DELIMITER + v
        live = {k: v for k, v in folded.items() if not _is_zero(v)}
        if not live:
            self._assign((), (), _EMPTY_I, _EMPTY_I, _EMPTY_F, None, sort=False)
            return
        row_keys = tuple(sorted({rt[1] for rt, _ in live}, key=sort_token))
        col_keys = tuple(sorted({ct[1] for _, ct in live}, key=sort_token))
        rmap = {k: i for i, k in enumerate(row_keys)}
        cmap = {k: i for i, k in enumerate(col_keys)}
        items = sorted(live.items())
        ri = np.fromiter((rmap[rt[1]] for (rt, _), _ in items), dtype=np.int64, count=len(items))
        ci = np.fromiter((cmap[ct[1]] for (_, ct), _ in items), dtype=np.int64, count=len(items))
        if numeric:
            vals = np.fromiter((v for _, v in items), dtype=np.float64, count=len(items))
        else:
            vals = [v for _, v in items]
        self._assign(row_keys, col_keys, ri, ci, vals, numeric, sort=False)

    def _assign(self, row_keys, col_keys, ri, ci, vals, numeric, sort=True):
        if len(ri) == 0:
            numeric = None
            vals = _EMPTY_F
        if sort and len(ri):
            order = np.lexsort((ci, ri))
            ri = ri[order]
            ci = ci[order]
            vals = vals[order] if numeric else [vals[i] for i in order]
        if isinstance(vals, np.ndarray):
            vals.setflags(write=False)
        ri.setflags(write=False)
        ci.setflags(write=False)
        self._row_keys = tuple(row_keys)
        self._col_keys = tuple(col_keys)
        self._ri = ri
        self._ci = ci
        self._vals = vals
        self._numeric = numeric
        self._csr_cache = None
        self._rowmap_cache = None
        self._colmap_cache = None
        self._lin_cache = None
        workingset.acquire_owned(self, len(ri))

    @classmethod
    def _from_arrays(cls, row_keys, col_keys, ri, ci, vals, numeric, sort=True) -> "Assoc":
        """Trusted constructor: keys pre-sorted and normalized, arrays int64."""
        obj = object.__new__(cls)
        obj._assign(row_keys, col_keys, ri, ci, vals, numeric, sort=sort)
        return obj

    @classmethod
    def identity(cls, keys) -> "Assoc":
        ks = tuple(sorted({normalize_key(k) for k in keys}, key=sort_token))
        n = len(ks)
        idx = np.arange(n, dtype=np.int64)
        return cls._from_arrays(ks, ks, idx, idx, np.ones(n), True, sort=False)

    # ---- basic introspection -------------------------------------------------

    @property
    def row_keys(self) -> tuple[Key, ...]:
        return self._row_keys

    @property
    def col_keys(self) -> tuple[Key, ...]:
        return self._col_keys

    @property
    def nnz(self) -> int:
        return len(self._ri)

    @property
    def is_numeric(self) -> bool | None:
        """True / False for populated arrays; None when empty."""
        return self._numeric

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self._row_keys), len(self._col_keys))

    def __bool__(self):
        return len(self._ri) > 0

    def __repr__(self):
        kind = {True: "numeric", False: "text", None: "empty"}[self._numeric]
        return f"Assoc({len(self._row_keys)}x{len(self._col_keys)}, nnz={self.nnz}, {kind})"

    def triples(self) -> list[Triple]:
        """Entries as (row, col, value), sorted by row then column key."""
        rk = self._row_keys
        ck = self._col_keys
        vals = self._vals.tolist() if isinstance(self._vals, np.ndarray) else self._vals
        return [
            (rk[r], ck[c], v)
            for r, c, v in zip(self._ri.tolist(), self._ci.tolist(), vals)
        ]

    def _rowmap(self):
        if self._rowmap_cache is None:
            self._rowmap_cache = {k: i for i, k in enumerate(self._row_keys)}
        return self._rowmap_cache

    def _colmap(self):
        if self._colmap_cache is None:
            self._colmap_cache = {k: i for i, k in enumerate(self._col_keys)}
        return self._colmap_cache

    def _lin(self):
        if self._lin_cache is None:
            self._lin_cache = self._ri * len(self._col_keys) + self._ci
        return self._lin_cache

    def get(self, row, col, default=None):
        r = self._rowmap().get(normalize_key(row))
        c = self._colmap().get(normalize_key(col))
        if r is None or c is None:
            return default
        lin = self._lin()
        pos = np.searchsorted(lin, r * len(self._col_keys) + c)
        if pos < len(lin) and lin[pos] == r * len(self._col_keys) + c:
            v = self._vals[pos]
            return float(v) if self._numeric else v
        return default

    def _csr(self) -> _sp.csr_matrix:
        if self._numeric is False:
            raise MixedValueVariant("numeric kernel on a text-valued array")
        if self._csr_cache is None:
            vals = self._vals if self.nnz else _EMPTY_F
            self._csr_cache = _sp.csr_matrix(
                (vals, (self._ri, self._ci)), shape=self.shape, dtype=np.float64
            )
        return self._csr_cache

    # ---- selection -----------------------------------------------------------

    def select(self, rows=":", cols=":") -> "Assoc":
        """Sub-array addressed by row and column selectors.

        Selectors may be Selector objects, selector strings, or positional
        literals. The result keeps exactly the matched keys (even ones left
        without entries) and the entries falling inside the selection.
        """
        ridx = match_keys(rows, self._row_keys)
        cidx = match_keys(cols, self._col_keys)
        new_rows = tuple(self._row_keys[i] for i in ridx)
        new_cols = tuple(self._col_keys[i] for i in cidx)
        if not ridx or not cidx or not self.nnz:
            return Assoc._from_arrays(
                new_rows, new_cols, _EMPTY_I, _EMPTY_I, _EMPTY_F, None, sort=False
            )
        rlook = np.full(len(self._row_keys), -1, dtype=np.int64)
        rlook[np.asarray(ridx, dtype=np.int64)] = np.arange(len(ridx), dtype=np.int64)
        clook = np.full(len(self._col_keys), -1, dtype=np.int64)
        clook[np.asarray(cidx, dtype=np.int64)] = np.arange(len(cidx), dtype=np.int64)
        nri = rlook[self._ri]
        nci = clook[self._ci]
        keep = (nri >= 0) & (nci >= 0)
        vals = self._vals[keep] if self._numeric else [self._vals[i] for i in np.flatnonzero(keep)]
        return Assoc._from_arrays(
            new_rows, new_cols, nri[keep], nci[keep], vals, self._numeric, sort=False
        )

    def equals_value(self, v) -> "Assoc":
        """Entries exactly equal to v, with keys pruned to surviving rows/cols."""
        v = normalize_value(v)
        if self._numeric is None:
            return Assoc()
        if isinstance(v, str) != (self._numeric is False):
            raise MixedValueVariant("value-equality probe must match the array's value variant")
        if self._numeric:
            keep = np.flatnonzero(self._vals == v)
        else:
            keep = np.asarray([i for i, x in enumerate(self._vals) if x == v], dtype=np.int64)
        return self._take(keep)

    def _take(self, positions: np.ndarray) -> "Assoc":
        """Sub-array of entry positions with keys pruned to what survives."""
        if len(positions) == 0:
            return Assoc()
        ri = self._ri[positions]
        ci = self._ci[positions]
        used_r = np.unique(ri)
        used_c = np.unique(ci)
        vals = self._vals[positions] if self._numeric else [self._vals[i] for i in positions]
        return Assoc._from_arrays(
            tuple(self._row_keys[i] for i in used_r),
            tuple(self._col_keys[i] for i in used_c),
            np.searchsorted(used_r, ri),
            np.searchsorted(used_c, ci),
            vals,
            self._numeric,
            sort=False,
        )

    def mask(self, other: "Assoc") -> "Assoc":
        """Entries of self at coordinates where `other` has an entry."""
        if not self.nnz or not other.nnz:
            return Assoc()
        rmap = self._rowmap()
        cmap = self._colmap()
        ncols = len(self._col_keys)
        wanted = []
        orl = other._row_keys
        ocl = other._col_keys
        for r, c in zip(other._ri, other._ci):
            i = rmap.get(orl[r])
            j = cmap.get(ocl[c])
            if i is not None and j is not None:
                wanted.append(i * ncols + j)
        if not wanted:
            return Assoc()
        wanted = np.unique(np.asarray(wanted, dtype=np.int64))
        keep = np.flatnonzero(np.isin(self._lin(), wanted))
        return self._take(keep)

    # ---- unary ops -----------------------------------------------------------

    def logical(self) -> "Assoc":
        """Pattern of the array: every entry becomes numeric 1."""
        return Assoc._from_arrays(
            self._row_keys, self._col_keys, self._ri, self._ci,
            np.ones(self.nnz), True if self.nnz else None, sort=False,
        )

    def transpose(self) -> "Assoc":
        return Assoc._from_arrays(
            self._col_keys, self._row_keys, self._ci.copy(), self._ri.copy(),
            self._vals if self._numeric else list(self._vals),
            self._numeric,
        )

    @property
    def T(self) -> "Assoc":
        return self.transpose()

    def reduce_rows(self) -> "Assoc":
        """Per-row sums as a single-column array under the reserved key 'deg'."""
        a = self.logical() if self._numeric is False else self
        if not a.nnz:
            return Assoc()
        sums = np.zeros(len(a._row_keys))
        np.add.at(sums, a._ri, a._vals)
        keep = np.flatnonzero(sums != 0.0)
        return Assoc._from_arrays(
            tuple(a._row_keys[i] for i in keep), ("deg",),
            np.arange(len(keep), dtype=np.int64), np.zeros(len(keep), dtype=np.int64),
            sums[keep], True if len(keep) else None, sort=False,
        )

    def reduce_cols(self) -> "Assoc":
        """Per-column sums as a single-row array under the reserved key 'deg'."""
        return self.transpose().reduce_rows().transpose()

    # ---- elementwise algebra -------------------------------------------------

    def _as_numeric(self) -> "Assoc":
        return self.logical() if self._numeric is False else self

    @staticmethod
    def _union_keys(a_keys, b_keys):
        if a_keys == b_keys:
            merged = a_keys
        else:
            merged = tuple(sorted(set(a_keys) | set(b_keys), key=sort_token))
        lookup = {k: i for i, k in enumerate(merged)}
        return merged, lookup

    def _relabel(self, rlookup, clookup):
        """Entry index arrays re-expressed against union key lists."""
        rmap = np.fromiter((rlookup[k] for k in self._row_keys), dtype=np.int64,
                           count=len(self._row_keys)) if self._row_keys else _EMPTY_I
        cmap = np.fromiter((clookup[k] for k in self._col_keys), dtype=np.int64,
                           count=len(self._col_keys)) if self._col_keys else _EMPTY_I
        return rmap[self._ri] if self.nnz else _EMPTY_I, cmap[self._ci] if self.nnz else _EMPTY_I

    def _merge_numeric(self, other: "Assoc", negate_b: bool, setop: str | None) -> "Assoc":
        a = self._as_numeric()
        b = other._as_numeric()
        rows, rlook = self._union_keys(a._row_keys, b._row_keys)
        cols, clook = self._union_keys(a._col_keys, b._col_keys)
        ncols = len(cols)
        ar, ac = a._relabel(rlook, clook)
        br, bc = b._relabel(rlook, clook)
        alin = ar * ncols + ac
        blin = br * ncols + bc
        if setop == "and":
            lin = np.intersect1d(alin, blin)
            vals = np.ones(len(lin))
        elif setop == "or":
            lin = np.union1d(alin, blin)
            vals = np.ones(len(lin))
        else:
            lin = np.concatenate([alin, blin])
            vals = np.concatenate([a._vals, -b._vals if negate_b else b._vals])
            order = np.argsort(lin, kind="stable")
            lin = lin[order]
            vals = vals[order]
            if len(lin):
                boundaries = np.flatnonzero(np.diff(lin)) + 1
                starts = np.concatenate([[0], boundaries])
                sums = np.add.reduceat(vals, starts)
                lin = lin[starts]
                keep = sums != 0.0
                lin = lin[keep]
                vals = sums[keep]
        if not len(lin):
            return Assoc()
        ri = lin // ncols
        ci = lin - ri * ncols
        used_r = np.unique(ri)
        used_c = np.unique(ci)
        return Assoc._from_arrays(
            tuple(rows[i] for i in used_r), tuple(cols[i] for i in used_c),
            np.searchsorted(used_r, ri), np.searchsorted(used_c, ci),
            vals, True, sort=False,
        )

    def add(self, other: "Assoc") -> "Assoc":
        """Elementwise sum (absent entries count as 0; exact zeros drop)."""
        return self._merge_numeric(other, negate_b=False, setop=None)

    def subtract(self, other: "Assoc") -> "Assoc":
        return self._merge_numeric(other, negate_b=True, setop=None)

    def and_(self, other: "Assoc") -> "Assoc":
        """Support intersection; surviving entries become 1."""
        return self._merge_numeric(other, negate_b=False, setop="and")

    def or_(self, other: "Assoc") -> "Assoc":
        """Support union; surviving entries become 1."""
        return self._merge_numeric(other, negate_b=False, setop="or")

    __add__ = add
    __sub__ = subtract
    __and__ = and_
    __or__ = or_

    # ---- matrix multiply -----------------------------------------------------

    def matmul(self, other: "Assoc", mode: MultiplyMode = MultiplyMode.ARITH) -> "Assoc":
        """Matrix product joining self's column keys with other's row keys.

        ARITH returns plus-times sums. CAT_KEY returns, per output cell, the
        joining inner keys rendered as text and joined with ';' in key order.
        CAT_VAL returns the 'aVal*bVal' pairs the same way. Output rows/cols
        are only the keys that produced entries.
        """
        if mode is MultiplyMode.ARITH:
            return self._matmul_arith(other)
        return self._matmul_cat(other, mode)

    def _join_indices(self, other: "Assoc"):
        common = set(self._col_keys) & set(other._row_keys)
        if not common:
            return None
        common = sorted(common, key=sort_token)
        cmap = self._colmap()
        rmap = other._rowmap()
        a_idx = [cmap[k] for k in common]
        b_idx = [rmap[k] for k in common]
        return common, a_idx, b_idx

    def _matmul_arith(self, other: "Assoc") -> "Assoc":
        a = self._as_numeric()
        b = other._as_numeric()
        if not a.nnz or not b.nnz:
            return Assoc()
        join = a._join_indices(b)
        if join is None:
            return Assoc()
        _, a_idx, b_idx = join
        asub = a._csr()[:, a_idx]
        bsub = b._csr()[b_idx, :]
        c = asub @ bsub
        c.eliminate_zeros()
        if c.nnz == 0:
            return Assoc()
        coo = c.tocoo()
        used_r = np.unique(coo.row)
        used_c = np.unique(coo.col)
        return Assoc._from_arrays(
            tuple(a._row_keys[i] for i in used_r),
            tuple(b._col_keys[i] for i in used_c),
            np.searchsorted(used_r, coo.row).astype(np.int64),
            np.searchsorted(used_c, coo.col).astype(np.int64),
            coo.data.astype(np.float64, copy=True),
            True,
        )

    def _matmul_cat(self, other: "Assoc", mode: MultiplyMode) -> "Assoc":
        if mode is MultiplyMode.CAT_VAL and self.nnz and other.nnz:
            if self._numeric != other._numeric:
                raise MixedValueVariant("CAT_VAL multiply needs matching value variants")
        join = self._join_indices(other) if (self.nnz and other.nnz) else None
        if join is None:
            return Assoc()
        common, a_idx, b_idx = join
        a_to_b = {ai: (bi, k) for ai, bi, k in zip(a_idx, b_idx, common)}
        b_rows: dict[int, list[tuple[int, Value]]] = {}
        for r, c, v in zip(other._ri, other._ci, other._vals):
            b_rows.setdefault(int(r), []).append((int(c), v))
        acc: dict[tuple[int, int], list[str]] = {}
        for r, c, av in zip(self._ri, self._ci, self._vals):
            hit = a_to_b.get(int(c))
            if hit is None:
                continue
            bi, k = hit
            for cj, bv in b_rows.get(bi, ()):
                piece = render_atom(k) if mode is MultiplyMode.CAT_KEY else (
                    render_atom(av) + "*" + render_atom(bv)
                )
                acc.setdefault((int(r), cj), []).append(piece)
        if not acc:
            return Assoc()
        triples = [
            (self._row_keys[r], other._col_keys[c], CONCAT_DELIMITER.join(pieces))
            for (r, c), pieces in acc.items()
        ]
        return Assoc(triples, rule=CollisionRule.LAST)

    __matmul__ = matmul
    __mul__ = matmul  # the algebra's A * B is matrix multiply

    # ---- comparison ----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Assoc):
            return NotImplemented
        if self._row_keys != other._row_keys or self._col_keys != other._col_keys:
            return False
        if self._numeric != other._numeric:
            return False
        if not np.array_equal(self._ri, other._ri) or not np.array_equal(self._ci, other._ci):
            return False
        if self._numeric:
            return bool(np.array_equal(self._vals, other._vals))
        return list(self._vals) == list(other._vals)

    __hash__ = None
