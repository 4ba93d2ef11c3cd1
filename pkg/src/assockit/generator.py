"""Deterministic power-law edge generator.

Edges come from recursive quadrant sampling over the 2^s x 2^s vertex grid
with quadrant probabilities (0.57, 0.19, 0.19, 0.05) and no vertex
permutation, so low-numbered vertices concentrate the high degrees. Every
edge consumes exactly two uniform draws per level; draw i of the run comes
from the splitmix64 counter stream

    z = seed + (i + 1) * 0x9E3779B97F4A7C15        (mod 2^64)
    z = (z ^ z >> 30) * 0xBF58476D1CE4E5B9          (mod 2^64)
    z = (z ^ z >> 27) * 0x94D049BB133111EB          (mod 2^64)
    u = ((z ^ z >> 31) >> 11) * 2^-53

which makes output byte-identical across platforms and partitionable by
edge index ranges.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ScaleTooLarge
from .schemas import EdgeList

QUADRANT_PROBS = (0.57, 0.19, 0.19, 0.05)
MAX_SCALE = 30

_AB = QUADRANT_PROBS[0] + QUADRANT_PROBS[1]
_A_NORM = QUADRANT_PROBS[0] / _AB
_C_NORM = QUADRANT_PROBS[2] / (1.0 - _AB)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_CHUNK = 1 << 20


@dataclass(frozen=True)
class GenConfig:
    scale: int
    edges_per_vertex: int = 16
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.scale, int) or self.scale < 1:
            raise ValueError(f"scale must be a positive integer, got {self.scale!r}")
        if self.scale > MAX_SCALE:
            raise ScaleTooLarge(f"scale {self.scale} exceeds the cap of {MAX_SCALE}")
        if not isinstance(self.edges_per_vertex, int) or self.edges_per_vertex < 1:
            raise ValueError(
                f"edges_per_vertex must be a positive integer, got {self.edges_per_vertex!r}"
            )
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")

    @property
    def vertex_count(self) -> int:
        return 1 << self.scale

    @property
    def edge_count(self) -> int:
        return self.edges_per_vertex << self.scale

    @property
    def key_width(self) -> int:
        return len(str(self.vertex_count - 1))


def uniform_draws(indices: np.ndarray, seed: int) -> np.ndarray:
    """Uniform [0, 1) doubles for the given draw counters."""
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (indices + np.uint64(1)) * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)) * 2.0**-53


def sample_endpoints(cfg: GenConfig, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    """Vertex ids (rows, cols) for the edge index range [start, stop)."""
    s = cfg.scale
    n = stop - start
    base = (np.arange(start, stop, dtype=np.uint64) * np.uint64(2 * s))
    rows = np.zeros(n, dtype=np.uint64)
    cols = np.zeros(n, dtype=np.uint64)
    for level in range(s):
        r_row = uniform_draws(base + np.uint64(2 * level), cfg.seed)
        r_col = uniform_draws(base + np.uint64(2 * level + 1), cfg.seed)
        row_bit = r_row > _AB
        col_bit = r_col > np.where(row_bit, _C_NORM, _A_NORM)
        rows |= row_bit.astype(np.uint64) << np.uint64(level)
        cols |= col_bit.astype(np.uint64) << np.uint64(level)
    return rows, cols


def generate(cfg: GenConfig) -> EdgeList:
    """All cfg.edge_count edges, duplicates and self-loops preserved.

    Unit weights; vertex keys are zero-padded decimal text so that
    lexicographic order matches numeric order.
    """
    width = cfg.key_width
    edges = []
    for start in range(0, cfg.edge_count, _CHUNK):
        stop = min(start + _CHUNK, cfg.edge_count)
        rows, cols = sample_endpoints(cfg, start, stop)
        edges.extend(
            (f"{u:0{width}d}", f"{v:0{width}d}", 1.0)
            for u, v in zip(rows.tolist(), cols.tolist())
        )
    return EdgeList(edges)


def degree_histogram(e: EdgeList) -> list[tuple[int, int]]:
    """(degree, vertex count) pairs of the normalized graph, degree descending."""
    degs = Counter()
    for u, v, _ in e.normalized().edges:
        degs[u] += 1
        degs[v] += 1
    hist = Counter(degs.values())
    return sorted(hist.items(), key=lambda dc: -dc[0])


def degree_slope(hist: list[tuple[int, int]], min_degree: int = 4) -> float:
    """Least-squares slope of log(count) against log(degree) at degree >= min_degree."""
    pts = [(d, c) for d, c in hist if d >= min_degree]
    if len(pts) < 2:
        raise ValueError("need at least two histogram points at or above min_degree")
    x = np.log([d for d, _ in pts])
    y = np.log([c for _, c in pts])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
